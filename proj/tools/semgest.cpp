// Command-line front end for every pipeline stage and the HTTP service.
//
// Configuration is resolved in this order: --config FILE, else --toy, else
// <work-dir>/config.json when present, else the defaults. --param key=value,
// --data-dir, --work-dir and --seed are applied on top. For generate and
// serve, --seed is the sampling seed of the request instead; use
// --param seed=N to pick the pipeline seed there.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "semgest/error.hpp"
#include "semgest/json_file.hpp"
#include "semgest/service/http_service.hpp"
#include "semgest/service/pipeline.hpp"

namespace fs = std::filesystem;
using namespace semgest;
using nlohmann::json;

namespace {

struct CommonOptions {
  std::optional<std::string> config_file;
  bool toy = false;
  std::vector<std::string> params;
  std::optional<std::string> data_dir;
  std::optional<std::string> work_dir;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonOptions& o, const std::string& seed_help) {
  cmd->add_option("--config", o.config_file, "Pipeline configuration JSON");
  cmd->add_flag("--toy", o.toy, "Start from the toy-scale configuration");
  cmd->add_option("--param", o.params, "Override one configuration key (key=value)");
  cmd->add_option("--data-dir", o.data_dir, "Dataset directory");
  cmd->add_option("--work-dir", o.work_dir, "Directory for trained artifacts");
  cmd->add_option("--seed", o.seed, seed_help);
}

json parse_param_value(const std::string& raw) {
  json v = json::parse(raw, nullptr, false);
  return v.is_discarded() ? json(raw) : v;
}

service::PipelineConfig resolve_config(const CommonOptions& o, bool seed_is_pipeline_seed) {
  const fs::path work = o.work_dir ? fs::path(*o.work_dir) : service::PipelineConfig{}.work_dir;
  json doc = service::config_to_json(o.toy ? service::toy_config() : service::PipelineConfig{});
  if (o.config_file) {
    doc.update(read_json_file(*o.config_file));
  } else if (!o.toy && fs::exists(work / "config.json")) {
    doc.update(read_json_file(work / "config.json"));
  }
  for (const std::string& p : o.params) {
    const auto eq = p.find('=');
    if (eq == std::string::npos || eq == 0) throw ValidationError("--param expects key=value, got '" + p + "'");
    const std::string key = p.substr(0, eq);
    if (!doc.contains(key)) throw ValidationError("config: unknown key '" + key + "'");
    doc[key] = parse_param_value(p.substr(eq + 1));
  }
  if (o.data_dir) doc["data_dir"] = *o.data_dir;
  if (o.work_dir) doc["work_dir"] = *o.work_dir;
  if (seed_is_pipeline_seed && o.seed) doc["seed"] = *o.seed;
  return service::config_from_json(doc);
}

void record_config(const service::PipelineConfig& config) {
  fs::create_directories(config.work_dir);
  service::save_config(config, config.work_dir / "config.json");
}

void print(const json& doc) { std::cout << doc.dump(2) << "\n"; }

text::AttentionOverride parse_overrides(const std::vector<std::string>& raw) {
  text::AttentionOverride out;
  for (const std::string& item : raw) {
    const auto eq = item.find('=');
    try {
      if (eq == std::string::npos) throw std::invalid_argument(item);
      std::size_t used = 0;
      const std::string index = item.substr(0, eq), weight = item.substr(eq + 1);
      const unsigned long i = std::stoul(index, &used);
      if (used != index.size()) throw std::invalid_argument(item);
      const double w = std::stod(weight, &used);
      if (used != weight.size()) throw std::invalid_argument(item);
      out.emplace_back(i, w);
    } catch (const std::exception&) {
      throw ValidationError("--override expects index=weight, got '" + item + "'");
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semgest: text-to-gesture training, retrieval and evaluation"};
  app.require_subcommand(1);

  CommonOptions common;
  const std::string train_seed = "Pipeline seed";

  CLI::App* synth = app.add_subcommand("synth-data", "Write the synthetic toy dataset");
  add_common(synth, common, train_seed);
  ingest::SynthOptions synth_options;
  synth->add_option("--families", synth_options.families, "Gesture families")->check(CLI::Range(2, 1000));
  synth->add_option("--per-family", synth_options.per_family, "Samples per family")->check(CLI::PositiveNumber);
  synth->add_option("--noise", synth_options.noise, "Motion noise level")->check(CLI::NonNegativeNumber);

  CLI::App* train_vae = app.add_subcommand("train-vae", "Train the key-pose gesture VAE");
  add_common(train_vae, common, train_seed);
  CLI::App* cluster = app.add_subcommand("cluster", "K-Means on the VAE means of the training clips");
  add_common(cluster, common, train_seed);
  CLI::App* pretrain =
      app.add_subcommand("pretrain-attention", "Fit the word attention to the annotations");
  add_common(pretrain, common, train_seed);
  CLI::App* train = app.add_subcommand("train", "Joint training of the text and gesture encoders");
  add_common(train, common, train_seed);
  CLI::App* library = app.add_subcommand("build-library", "Embed the training clips for retrieval");
  add_common(library, common, train_seed);

  CLI::App* generate = app.add_subcommand("generate", "Generate a gesture for a text");
  add_common(generate, common, "Sampling seed of the request");
  std::string text, out;
  std::vector<std::string> overrides;
  std::optional<double> duration;
  std::optional<std::size_t> k;
  generate->add_option("--text", text, "Input text")->required();
  generate->add_option("--out", out, "Motion JSON output; diagnostics go next to it")->required();
  generate->add_option("--override", overrides, "Attention override index=weight (repeatable)");
  generate->add_option("--duration", duration, "Target duration in seconds")->check(CLI::PositiveNumber);
  generate->add_option("--k", k, "Neighbors considered per segment")->check(CLI::PositiveNumber);

  CLI::App* eval = app.add_subcommand("eval", "Metrics over clip-set directories");
  add_common(eval, common, "Seed of the FGD feature model");
  service::EvalOptions eval_options;
  std::vector<std::string> sets;
  std::string fgd_model, report_out;
  eval->add_option("--set", sets, "Directory of motion JSON files (repeatable)")->required();
  eval->add_option("--fgd-model", fgd_model, "FGD feature model JSON (trained from the first set when absent)");
  eval->add_option("--fgd-epochs", eval_options.fgd_epochs, "Epochs when training the FGD model");
  eval->add_option("--scores", eval_options.scores, "One score per set, for correlations");
  eval->add_option("--out", report_out, "Write the report JSON here");

  CLI::App* serve = app.add_subcommand("serve", "Run the HTTP service");
  add_common(serve, common, "Unused; requests carry their own seed");
  std::string host = "127.0.0.1";
  std::optional<std::uint16_t> port;
  serve->add_option("--host", host, "Listen address");
  serve->add_option("--port", port, "Listen port (default: SEMGEST_PORT or 8080)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    CLI::App* cmd = app.get_subcommands().front();
    const bool request_seed = cmd == generate || cmd == serve || cmd == eval;
    const service::PipelineConfig config = resolve_config(common, !request_seed);

    if (cmd == synth) {
      record_config(config);
      print(service::run_synth_data(config, synth_options));
    } else if (cmd == train_vae) {
      record_config(config);
      print(service::run_train_vae(config));
    } else if (cmd == cluster) {
      print(service::run_cluster(config));
    } else if (cmd == pretrain) {
      print(service::run_pretrain_attention(config));
    } else if (cmd == train) {
      print(service::run_train(config));
    } else if (cmd == library) {
      print(service::run_build_library(config));
    } else if (cmd == generate) {
      const service::Runtime runtime = service::load_runtime(config);
      retrieval::GenerationRequest request;
      request.text = text;
      request.attention_override = parse_overrides(overrides);
      request.target_duration_s = duration;
      request.seed = common.seed.value_or(0);
      request.k = k.value_or(config.k_neighbors);
      const retrieval::Generation g = service::run_generate(runtime, request, out);
      json summary = {{"out", out}, {"frames", g.motion.frames.size()}};
      for (const auto& s : g.segments) summary["clips"].push_back(s.clip_id);
      print(summary);
    } else if (cmd == eval) {
      for (const std::string& s : sets) eval_options.sets.emplace_back(s);
      eval_options.fgd_model = fgd_model;
      eval_options.seed = common.seed.value_or(0);
      const metrics::MetricReport report = service::run_eval(config, eval_options);
      std::cout << metrics::report_table(report);
      if (!report_out.empty()) {
        json doc = metrics::report_json(report);
        doc["config_hash"] = service::config_hash(config);
        write_json_file(doc, report_out);
      }
    } else if (cmd == serve) {
      service::Service svc(service::load_runtime(config));
      const std::uint16_t p = port.value_or(service::port_from_env());
      std::cerr << "listening on " << host << ":" << p << "\n";
      service::serve(svc, host, p);
    }
    return 0;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

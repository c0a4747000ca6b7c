#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "semgest/error.hpp"
#include "semgest/json_file.hpp"
#include "semgest/service/http_service.hpp"
#include "test_files.hpp"

using namespace semgest;
using namespace semgest::service;
using nlohmann::json;

namespace {

PipelineConfig tiny_config(const std::filesystem::path& root) {
  PipelineConfig c = toy_config();
  c.data_dir = root / "data";
  c.work_dir = root / "work";
  c.seed = 5;
  c.latent_dim = 4;
  c.vae_hidden = 8;
  c.vae_epochs = 2;
  c.clusters = 2;
  c.feature_dim = 4;
  c.text_hidden = 4;
  c.pretrain_epochs = 2;
  c.gesture_hidden = 8;
  c.epochs = 2;
  c.batch = 8;
  c.margin_warmup = 0;
  c.k_neighbors = 3;
  return c;
}

// One small trained pipeline shared by the tests below.
const PipelineConfig& trained() {
  static const PipelineConfig config = [] {
    const PipelineConfig c = tiny_config(testing::scratch_dir("service"));
    run_synth_data(c, {.families = 2, .per_family = 10});
    run_train_vae(c);
    run_cluster(c);
    run_pretrain_attention(c);
    run_train(c);
    run_build_library(c);
    return c;
  }();
  return config;
}

Service& shared_service() {
  static Service s(load_runtime(trained()));
  return s;
}

std::string error_code(const Response& r) { return r.body.at("error").at("code"); }

}  // namespace

TEST_CASE("config JSON round trip and strictness") {
  PipelineConfig c = toy_config();
  c.margin = 3.5;
  c.work_dir = "somewhere/else";
  const PipelineConfig back = config_from_json(config_to_json(c));
  CHECK(config_to_json(back) == config_to_json(c));
  CHECK(config_hash(back) == config_hash(c));

  CHECK_THROWS_AS(config_from_json(json{{"marginn", 2}}), ValidationError);
  CHECK_THROWS_AS(config_from_json(json{{"margin", "wide"}}), ValidationError);
  CHECK_THROWS_AS(config_from_json(json{{"margin", -1}}), ValidationError);
  CHECK_THROWS_AS(config_from_json(json{{"batch", 1}}), ValidationError);
  CHECK_THROWS_AS(config_from_json(json::array()), ValidationError);

  const PipelineConfig defaults = config_from_json(json::object());
  CHECK(defaults.latent_dim == 32);
  CHECK(defaults.clusters == 40);
  CHECK(defaults.margin == 20.0);
  CHECK(defaults.alpha == 10.0);
  CHECK(defaults.beta == 2.0);
}

TEST_CASE("config hash covers training settings only") {
  const PipelineConfig base;
  PipelineConfig other = base;
  other.data_dir = "x";
  other.work_dir = "y";
  other.k_neighbors = 3;
  CHECK(config_hash(other) == config_hash(base));
  other.margin = 19.0;
  CHECK(config_hash(other) != config_hash(base));
  other = base;
  other.seed = 1;
  CHECK(config_hash(other) != config_hash(base));
  CHECK(config_hash(base).size() == 16);
}

TEST_CASE("pipeline stages write hash-tagged artifacts") {
  const PipelineConfig& c = trained();
  const Paths paths = paths_for(c);
  const std::string hash = config_hash(c);
  for (const auto& p : {paths.vae, paths.clusters, paths.pretrained, paths.checkpoint}) {
    CHECK(read_json_file(p).at("config_hash") == hash);
  }
  CHECK(read_json_file(paths.library / "library.json").at("config_hash") == hash);

  // Re-saving loaded artifacts reproduces the files byte for byte.
  const auto scratch = testing::scratch_dir("service_resave");
  contrastive::save_checkpoint(contrastive::load_checkpoint(paths.checkpoint),
                               scratch / "checkpoint.json");
  CHECK(testing::slurp(scratch / "checkpoint.json") == testing::slurp(paths.checkpoint));
  retrieval::save_library(retrieval::load_library(paths.library), scratch / "library");
  CHECK(testing::same_tree(scratch / "library", paths.library));
}

TEST_CASE("stages refuse artifacts from another configuration") {
  PipelineConfig other = trained();
  other.margin += 1.0;
  CHECK_THROWS_AS(run_cluster(other), ConfigMismatchError);
  CHECK_THROWS_AS(run_train(other), ConfigMismatchError);
  CHECK_THROWS_AS(run_build_library(other), ConfigMismatchError);
  CHECK_THROWS_AS(load_runtime(other), ConfigMismatchError);
}

TEST_CASE("generate stage writes motion and diagnostics") {
  const auto dir = testing::scratch_dir("service_generate");
  const Runtime rt = load_runtime(trained());
  retrieval::GenerationRequest request{.text = "the ball goes up", .seed = 3};
  const retrieval::Generation g = run_generate(rt, request, dir / "g.json");
  CHECK(motion::load_motion(dir / "g.json") == g.motion);
  const json diag = read_json_file(dir / "g.diagnostics.json");
  CHECK(diag.at("config_hash") == rt.config_hash);
  CHECK(diag.at("segments").size() == 1);
}

TEST_CASE("eval of a set against itself has zero FGD and L1") {
  const auto dir = testing::scratch_dir("service_eval");
  const Runtime rt = load_runtime(trained());
  std::filesystem::create_directories(dir / "a");
  for (std::size_t i = 0; i < 4; ++i) {
    motion::save_motion(rt.library.clips[i], dir / "a" / (rt.library.entries[i].clip_id + ".json"));
  }
  EvalOptions options{.sets = {dir / "a", dir / "a"}, .fgd_epochs = 2, .seed = 1};
  const metrics::MetricReport report = run_eval(trained(), options);
  REQUIRE(report.fgd);
  CHECK(std::abs(*report.fgd) < 1e-8);
  CHECK(*report.l1 == doctest::Approx(0.0));
  REQUIRE(report.sets.size() == 2);
  CHECK(report.sets[0].diversity.has_value());
  CHECK(report.sets[0].jerk == report.sets[1].jerk);

  options.scores = {1.0};
  CHECK_THROWS_AS(run_eval(trained(), options), ValidationError);
  CHECK_THROWS_AS(load_clip_set(dir / "missing"), ValidationError);
}

TEST_CASE("healthz and tokenize") {
  Service& s = shared_service();
  const Response h = s.healthz();
  CHECK(h.status == 200);
  CHECK(h.body.at("config_hash") == s.runtime().config_hash);

  const Response t = s.tokenize(R"({"text": "These two, large BALLS!"})");
  CHECK(t.status == 200);
  CHECK(t.body.at("tokens") == json({"these", "two", "large", "balls"}));
  CHECK(t.body.at("truncated") == false);

  CHECK(error_code(s.tokenize("{")) == "validation_error");
  CHECK(s.tokenize("{").status == 400);
  CHECK(s.tokenize(R"({"text": 4})").status == 400);
  CHECK(s.tokenize(R"({"text": "a", "extra": 1})").status == 400);
  CHECK(s.tokenize(R"({"text": "  ,, "})").status == 400);
}

TEST_CASE("attention returns 32 normalized weights") {
  Service& s = shared_service();
  const Response r = s.attention(R"({"text": "these two large balls"})");
  REQUIRE(r.status == 200);
  const auto a = r.body.at("attention").get<std::vector<double>>();
  CHECK(a.size() == 32);
  double sum = 0.0;
  for (double v : a) sum += v;
  CHECK(std::abs(sum - 1.0) < 1e-12);
  CHECK(r.body.at("raw_attention").size() == 32);
}

TEST_CASE("generate is deterministic and honors overrides") {
  Service& s = shared_service();
  const std::string body = R"({"text": "a ball and a wave", "seed": 11})";
  const Response a = s.generate(body), b = s.generate(body);
  REQUIRE(a.status == 200);
  CHECK(a.body.dump() == b.body.dump());
  CHECK(a.body.at("motion").at("frames").size() > 0);

  const Response o =
      s.generate(R"({"text": "a ball and a wave", "seed": 11,
                     "attention_override": [{"index": 1, "weight": 0.5}]})");
  REQUIRE(o.status == 200);
  const json& seg = o.body.at("diagnostics").at("segments").at(0);
  CHECK(seg.at("overridden") == true);
  CHECK(seg.at("attention") != a.body.at("diagnostics").at("segments").at(0).at("attention"));

  const Response timed = s.generate(R"({"text": "a ball", "target_duration_s": 2.0})");
  REQUIRE(timed.status == 200);
}

TEST_CASE("generate rejects bad requests") {
  Service& s = shared_service();
  CHECK(s.generate(R"({"seed": 1})").status == 400);
  CHECK(s.generate(R"({"text": "ball", "seed": -1})").status == 400);
  CHECK(s.generate(R"({"text": "ball", "k": 0})").status == 400);
  CHECK(s.generate(R"({"text": "ball", "target_duration_s": -2})").status == 400);
  CHECK(s.generate(R"({"text": "ball", "attention_override": [{"index": 5, "weight": 0.5}]})")
            .status == 400);
  CHECK(s.generate(R"({"text": "ball", "attention_override": [{"index": 0, "weight": 1.5}]})")
            .status == 400);
  CHECK(s.generate(R"({"text": "ball", "attention_override": {"index": 0}})").status == 400);

  const Response mismatch = s.generate(R"({"text": "ball", "config_hash": "0000000000000000"})");
  CHECK(mismatch.status == 409);
  CHECK(error_code(mismatch) == "config_mismatch");
  const std::string ok =
      R"({"text": "ball", "config_hash": ")" + s.runtime().config_hash + R"("})";
  CHECK(s.generate(ok).status == 200);
}

TEST_CASE("library lookup") {
  Service& s = shared_service();
  const std::string id = s.runtime().library.entries.front().clip_id;
  const Response r = s.library_clip(id);
  CHECK(r.status == 200);
  CHECK(motion::motion_from_json(r.body) == s.runtime().library.clips.front());
  const Response missing = s.library_clip("nope");
  CHECK(missing.status == 404);
  CHECK(error_code(missing) == "not_found");
}

TEST_CASE("space projects library and recent texts") {
  Service& s = shared_service();
  s.generate(R"({"text": "wave wave", "seed": 2})");
  const Response r = s.space({{"dims", "2"}});
  REQUIRE(r.status == 200);
  CHECK(r.body.at("gestures").size() == s.runtime().library.size());
  CHECK(r.body.at("gestures").at(0).at("point").size() == 2);
  CHECK(!r.body.at("texts").empty());
  CHECK(r.body.at("texts").back().at("text") == "wave wave");
  CHECK(r.body.at("gestures") == s.space({{"dims", "2"}}).body.at("gestures"));
  CHECK(r.body.at("gestures") != s.space({{"dims", "2"}, {"seed", "9"}}).body.at("gestures"));

  CHECK(s.space({{"dims", "0"}}).status == 400);
  CHECK(s.space({{"dims", "x"}}).status == 400);
  CHECK(s.space({{"dims", "99"}}).status == 400);
  CHECK(s.space({{"color", "red"}}).status == 400);
}

TEST_CASE("recent text ring is bounded") {
  Service s(load_runtime(trained()), 2);
  for (const char* t : {"ball", "wave", "ball wave"}) {
    s.attention(json{{"text", t}}.dump());
  }
  const json texts = s.space({}).body.at("texts");
  REQUIRE(texts.size() == 2);
  CHECK(texts.at(0).at("text") == "wave");
  CHECK(texts.at(1).at("text") == "ball wave");
}

TEST_CASE("routing") {
  Service& s = shared_service();
  CHECK(s.handle("GET", "/healthz", {}, "").status == 200);
  CHECK(s.handle("GET", "/nowhere", {}, "").status == 404);
  CHECK(s.handle("GET", "/generate", {}, "").status == 404);
  CHECK(s.handle("GET", "/library/a/b", {}, "").status == 404);
}

TEST_CASE("port from environment") {
  ::unsetenv("SEMGEST_PORT");
  CHECK(port_from_env(1234) == 1234);
  ::setenv("SEMGEST_PORT", "9099", 1);
  CHECK(port_from_env(1234) == 9099);
  ::setenv("SEMGEST_PORT", "99999", 1);
  CHECK(port_from_env(1234) == 1234);
  ::setenv("SEMGEST_PORT", "12ab", 1);
  CHECK(port_from_env(1234) == 1234);
  ::unsetenv("SEMGEST_PORT");
}

TEST_CASE("live HTTP round trip") {
  Service& s = shared_service();
  httplib::Server server;
  s.mount(server);
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread listener([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  const auto health = client.Get("/healthz");
  REQUIRE(health);
  CHECK(health->status == 200);
  CHECK(health->get_header_value("Content-Type") == "application/json");

  const std::string body = R"({"text": "the ball rolls", "seed": 4})";
  const auto g1 = client.Post("/generate", body, "application/json");
  const auto g2 = client.Post("/generate", body, "application/json");
  REQUIRE(g1);
  REQUIRE(g2);
  CHECK(g1->status == 200);
  CHECK(g1->body == g2->body);
  CHECK(g1->body == s.generate(body).body.dump());

  const auto bad = client.Post("/generate", "not json", "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 400);
  CHECK(json::parse(bad->body).at("error").at("code") == "validation_error");

  const auto clip = client.Get("/library/" + s.runtime().library.entries.front().clip_id);
  REQUIRE(clip);
  CHECK(clip->status == 200);
  const auto missing = client.Get("/library/none");
  REQUIRE(missing);
  CHECK(missing->status == 404);
  const auto space = client.Get("/space?dims=2");
  REQUIRE(space);
  CHECK(space->status == 200);
  const auto unknown = client.Get("/unknown");
  REQUIRE(unknown);
  CHECK(unknown->status == 404);
  CHECK(json::parse(unknown->body).at("error").at("code") == "not_found");

  server.stop();
  listener.join();
}

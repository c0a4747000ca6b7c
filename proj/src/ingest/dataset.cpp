#include "semgest/ingest/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "semgest/error.hpp"
#include "semgest/json_file.hpp"
#include "semgest/text/tokenizer.hpp"

namespace semgest::ingest {

namespace {

constexpr int kDatasetFormatVersion = 1;

const std::set<std::string> kGestureTypes = {"beat", "representational", "non-gesture"};

bool safe_relative(const std::string& p) {
  const std::filesystem::path path(p);
  if (p.empty() || path.is_absolute()) return false;
  for (const auto& part : path) {
    if (part == "..") return false;
  }
  return true;
}

class Problems {
 public:
  void add(const std::string& where, const std::string& what) { list_.push_back(where + ": " + what); }
  void throw_if_any(const std::string& context) const {
    if (list_.empty()) return;
    std::ostringstream msg;
    msg << context << ": " << list_.size() << " problem(s)";
    for (const auto& p : list_) msg << "\n  " << p;
    throw ValidationError(msg.str());
  }

 private:
  std::vector<std::string> list_;
};

void check_samples(const Dataset& d, Problems& problems) {
  std::set<std::string> ids, clips;
  for (std::size_t i = 0; i < d.samples.size(); ++i) {
    const AnnotatedSample& s = d.samples[i];
    const std::string where = "sample '" + s.text_id + "'";
    if (s.text_id.empty()) problems.add("sample #" + std::to_string(i), "empty text_id");
    if (!ids.insert(s.text_id).second) problems.add(where, "duplicate text_id");
    const std::size_t words = text::count_words(s.text);
    if (words == 0) problems.add(where, "field 'text' holds no words");
    if (words > text::kMaxTokens) {
      problems.add(where, "field 'text' has " + std::to_string(words) + " words, at most " +
                              std::to_string(text::kMaxTokens) + " are supported");
    }
    if (words != 0 && s.labels.size() != words) {
      problems.add(where, "field 'labels' has " + std::to_string(s.labels.size()) +
                              " entries for " + std::to_string(words) + " words");
    }
    for (int l : s.labels) {
      if (l != 0 && l != 1) {
        problems.add(where, "field 'labels' must hold only 0 and 1");
        break;
      }
    }
    if (s.gesture_type) {
      if (!kGestureTypes.count(*s.gesture_type)) {
        problems.add(where, "field 'gesture_type' has unknown value '" + *s.gesture_type + "'");
      } else if (*s.gesture_type == "representational" &&
                 std::find(s.labels.begin(), s.labels.end(), 1) == s.labels.end()) {
        problems.add(where, "representational sample needs at least one labeled word");
      }
    }
    if (!safe_relative(s.clip)) {
      problems.add(where, "field 'clip' must be a relative path inside the dataset: " + s.clip);
    } else if (!clips.insert(s.clip).second) {
      problems.add(where, "field 'clip' reuses " + s.clip);
    }
  }

  std::set<std::string> assigned;
  for (const auto& [name, members] : d.splits) {
    if (std::find(kSplitNames.begin(), kSplitNames.end(), name) == kSplitNames.end()) {
      problems.add("split '" + name + "'", "unknown split name");
    }
    for (const auto& id : members) {
      if (!ids.count(id)) problems.add("split '" + name + "'", "unknown text_id '" + id + "'");
      if (!assigned.insert(id).second) {
        problems.add("split '" + name + "'", "text_id '" + id + "' assigned twice");
      }
    }
  }
  for (const auto& id : ids) {
    if (!assigned.count(id)) problems.add("sample '" + id + "'", "not assigned to any split");
  }
}

}  // namespace

std::size_t Dataset::index_of(const std::string& text_id) const {
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].text_id == text_id) return i;
  }
  throw ValidationError("dataset: no sample '" + text_id + "'");
}

std::vector<std::size_t> Dataset::split(const std::string& name) const {
  const auto it = splits.find(name);
  if (it == splits.end()) throw ValidationError("dataset: no split '" + name + "'");
  std::vector<std::size_t> out;
  for (const auto& id : it->second) out.push_back(index_of(id));
  return out;
}

nlohmann::json annotation_json(const AnnotatedSample& s) {
  nlohmann::json j = {{"text_id", s.text_id}, {"text", s.text}, {"labels", s.labels}, {"clip", s.clip}};
  if (s.gesture_type) j["gesture_type"] = *s.gesture_type;
  if (s.family) j["family"] = *s.family;
  return j;
}

AnnotatedSample annotation_from_json(const nlohmann::json& doc) {
  AnnotatedSample s;
  s.text_id = doc.at("text_id").get<std::string>();
  s.text = doc.at("text").get<std::string>();
  s.labels = doc.at("labels").get<std::vector<int>>();
  s.clip = doc.at("clip").get<std::string>();
  if (doc.contains("gesture_type")) s.gesture_type = doc.at("gesture_type").get<std::string>();
  if (doc.contains("family")) s.family = doc.at("family").get<std::size_t>();
  return s;
}

void validate_dataset(const Dataset& dataset) {
  Problems problems;
  check_samples(dataset, problems);
  if (dataset.motions.size() != dataset.samples.size()) {
    problems.add("dataset", "motion list does not match the samples");
  } else {
    for (std::size_t i = 0; i < dataset.motions.size(); ++i) {
      try {
        dataset.motions[i].validate();
      } catch (const ValidationError& e) {
        problems.add("sample '" + dataset.samples[i].text_id + "'", e.what());
      }
    }
  }
  problems.throw_if_any("dataset");
}

Dataset load_dataset(const std::filesystem::path& manifest) {
  const std::filesystem::path root = manifest.parent_path();
  const nlohmann::json doc = read_json_file(manifest);
  Dataset d;
  Problems problems;
  std::vector<std::string> listed;
  try {
    if (doc.at("format") != "semgest-dataset" || doc.at("version") != kDatasetFormatVersion) {
      throw ValidationError("manifest " + manifest.string() + ": unexpected format or version");
    }
    d.seed = doc.at("seed").get<std::uint64_t>();
    d.embeddings_file = doc.at("embeddings").get<std::string>();
    d.annotations_file = doc.at("annotations").get<std::string>();
    d.splits = doc.at("splits").get<std::map<std::string, std::vector<std::string>>>();
    listed = doc.at("samples").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("manifest " + manifest.string() + ": " + e.what());
  }
  for (const std::string* f : {&d.embeddings_file, &d.annotations_file}) {
    if (!safe_relative(*f)) throw ValidationError("manifest: unsafe path " + *f);
  }

  std::ifstream in(root / d.annotations_file, std::ios::binary);
  if (!in) throw ValidationError("missing annotation file " + (root / d.annotations_file).string());
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (line.empty()) continue;
    try {
      d.samples.push_back(annotation_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      problems.add(d.annotations_file + " line " + std::to_string(n), e.what());
    }
  }
  problems.throw_if_any("dataset " + root.string());

  std::vector<std::string> ids;
  for (const auto& s : d.samples) ids.push_back(s.text_id);
  if (ids != listed) problems.add("manifest", "sample list does not match the annotation file");
  check_samples(d, problems);
  problems.throw_if_any("dataset " + root.string());

  for (const auto& s : d.samples) {
    try {
      motion::MotionClip clip = motion::load_motion(root / s.clip);
      d.motions.push_back(std::move(clip));
    } catch (const ValidationError& e) {
      problems.add("sample '" + s.text_id + "'", e.what());
    }
  }
  if (!std::filesystem::exists(root / d.embeddings_file)) {
    problems.add("manifest", "missing embedding table " + (root / d.embeddings_file).string());
  } else {
    try {
      d.embeddings = text::EmbeddingProvider::load(root / d.embeddings_file, d.seed);
    } catch (const ValidationError& e) {
      problems.add("embeddings", e.what());
    }
  }
  problems.throw_if_any("dataset " + root.string());
  return d;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& root) {
  validate_dataset(dataset);
  std::filesystem::create_directories(root);
  nlohmann::json ids = nlohmann::json::array();
  {
    std::ofstream out(root / dataset.annotations_file, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + (root / dataset.annotations_file).string());
    for (const auto& s : dataset.samples) {
      out << annotation_json(s).dump() << '\n';
      ids.push_back(s.text_id);
    }
  }
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    const auto path = root / dataset.samples[i].clip;
    std::filesystem::create_directories(path.parent_path());
    motion::save_motion(dataset.motions[i], path);
  }
  dataset.embeddings.save(root / dataset.embeddings_file);
  write_json_file({{"format", "semgest-dataset"},
                   {"version", kDatasetFormatVersion},
                   {"seed", dataset.seed},
                   {"embeddings", dataset.embeddings_file},
                   {"annotations", dataset.annotations_file},
                   {"samples", std::move(ids)},
                   {"splits", dataset.splits}},
                  root / "manifest.json");
}

}  // namespace semgest::ingest

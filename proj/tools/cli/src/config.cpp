#include "idil/cli/config.hpp"

#include <cstdlib>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "idil/error.hpp"
#include "idil/io.hpp"

namespace idil::cli {

namespace pt = boost::property_tree;

std::string to_string(Confidence c) { return c == Confidence::mahalanobis ? "mahalanobis" : "max-softmax"; }

Confidence parse_confidence(const std::string& name) {
  if (name == "max-softmax") return Confidence::max_softmax;
  if (name == "mahalanobis") return Confidence::mahalanobis;
  throw ConfigError("unknown confidence source '" + name + "' (expected max-softmax or mahalanobis)");
}

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string unquote(std::string s) {
  s = trim(std::move(s));
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = unquote(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

class Section {
 public:
  Section(const pt::ptree& tree, std::string name, std::string source)
      : name_(std::move(name)), source_(std::move(source)) {
    for (const auto& [key, value] : tree) values_[key] = unquote(value.data());
  }

  std::optional<std::string> get(const std::string& key) {
    used_.insert(key);
    if (auto it = values_.find(key); it != values_.end()) return it->second;
    return std::nullopt;
  }

  template <typename T>
  std::optional<T> number(const std::string& key) {
    auto raw = get(key);
    if (!raw) return std::nullopt;
    std::istringstream in(*raw);
    T v{};
    in >> v;
    if (!in || !(in >> std::ws).eof()) {
      throw ConfigError(source_ + ": [" + name_ + "] " + key + " = '" + *raw + "' is not a valid number");
    }
    return v;
  }

  void reject_unknown() const {
    for (const auto& [key, value] : values_)
      if (!used_.contains(key)) throw ConfigError(source_ + ": unknown key '" + key + "' in [" + name_ + "]");
  }

 private:
  std::string name_;
  std::string source_;
  std::map<std::string, std::string> values_;
  std::set<std::string> used_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_absolute() || base.empty()) return path;
  return base / path;
}

std::string number_text(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir,
                              const std::string& source) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(source + ":" + std::to_string(e.line()) + ": " + e.message());
  }

  static const std::set<std::string> known = {"data", "model", "train", "eval", "output"};
  for (const auto& [name, sub] : tree) {
    if (!known.contains(name)) throw ConfigError(source + ": unknown section [" + name + "]");
    if (sub.data().size() && sub.empty()) throw ConfigError(source + ": key '" + name + "' outside a section");
  }
  auto section = [&](const std::string& name) {
    auto child = tree.get_child_optional(name);
    return Section(child ? *child : pt::ptree(), name, source);
  };

  ExperimentConfig cfg;

  Section d = section("data");
  if (auto v = d.get("in_dist")) cfg.in_dist = resolve(base_dir, *v);
  if (auto v = d.get("ood")) {
    cfg.ood.clear();
    for (const auto& p : split_list(*v)) cfg.ood.push_back(resolve(base_dir, p));
  }
  if (auto v = d.number<std::size_t>("feature_dim")) cfg.feature_dim = *v;
  d.reject_unknown();

  Section m = section("model");
  if (auto v = m.number<std::size_t>("hidden_dim")) cfg.hidden_dim = *v;
  m.reject_unknown();

  Section t = section("train");
  if (auto v = t.get("loss")) cfg.train.variant = losses::parse_variant(*v);
  if (auto v = t.number<std::size_t>("epochs")) cfg.train.epochs = *v;
  if (auto v = t.number<std::size_t>("batch_size")) cfg.train.batch_size = *v;
  if (auto v = t.get("lr")) {
    if (*v == "finetune") {
      cfg.train.lr = train::kFinetuneLearningRate;
    } else {
      try {
        std::size_t used = 0;
        cfg.train.lr = std::stod(*v, &used);
        if (used != v->size()) throw std::invalid_argument("trailing characters");
      } catch (const std::exception&) {
        throw ConfigError(source + ": [train] lr = '" + *v + "' is neither a number nor 'finetune'");
      }
    }
  }
  if (auto v = t.number<double>("weight_decay")) cfg.train.adamw.weight_decay = *v;
  if (auto v = t.number<double>("beta1")) cfg.train.adamw.beta1 = *v;
  if (auto v = t.number<double>("beta2")) cfg.train.adamw.beta2 = *v;
  if (auto v = t.number<double>("eps")) cfg.train.adamw.eps = *v;
  if (auto v = t.get("seeds")) {
    cfg.seeds.clear();
    for (const auto& s : split_list(*v)) {
      try {
        cfg.seeds.push_back(std::stoull(s));
      } catch (const std::exception&) {
        throw ConfigError(source + ": [train] seeds: '" + s + "' is not a seed");
      }
    }
  }
  if (auto v = t.get("val_ood"); v && !v->empty()) cfg.val_ood = resolve(base_dir, *v);
  t.reject_unknown();

  Section e = section("eval");
  if (auto v = e.get("confidence")) cfg.confidence = parse_confidence(*v);
  if (auto v = e.number<std::size_t>("bins")) cfg.bins = *v;
  if (auto v = e.number<double>("mahalanobis_eps")) cfg.mahalanobis_eps = *v;
  e.reject_unknown();

  Section o = section("output");
  if (auto v = o.get("dir")) cfg.out_dir = resolve(base_dir, *v);
  o.reject_unknown();

  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = io::read_text(path);
  } catch (const DataError& e) {
    throw ConfigError(std::string("unreadable config: ") + e.what());
  }
  return parse_config(text, path.parent_path(), path.string());
}

std::string render_config(const ExperimentConfig& cfg) {
  std::string out;
  out += "[data]\n";
  out += "in_dist = " + cfg.in_dist.string() + "\n";
  out += "ood = ";
  for (std::size_t i = 0; i < cfg.ood.size(); ++i) out += (i ? ", " : "") + cfg.ood[i].string();
  out += "\nfeature_dim = " + std::to_string(cfg.feature_dim) + "\n\n";
  out += "[model]\nhidden_dim = " + std::to_string(cfg.hidden_dim) + "\n\n";
  out += "[train]\n";
  out += "loss = \"" + std::string(losses::to_string(cfg.train.variant)) + "\"\n";
  out += "epochs = " + std::to_string(cfg.train.epochs) + "\n";
  out += "batch_size = " + std::to_string(cfg.train.batch_size) + "\n";
  out += "lr = " + number_text(cfg.train.lr) + "\n";
  out += "weight_decay = " + number_text(cfg.train.adamw.weight_decay) + "\n";
  out += "beta1 = " + number_text(cfg.train.adamw.beta1) + "\n";
  out += "beta2 = " + number_text(cfg.train.adamw.beta2) + "\n";
  out += "eps = " + number_text(cfg.train.adamw.eps) + "\n";
  out += "seeds = ";
  for (std::size_t i = 0; i < cfg.seeds.size(); ++i) out += (i ? ", " : "") + std::to_string(cfg.seeds[i]);
  out += "\n";
  if (cfg.val_ood) out += "val_ood = " + cfg.val_ood->string() + "\n";
  out += "\n[eval]\nconfidence = " + to_string(cfg.confidence) + "\n";
  out += "bins = " + std::to_string(cfg.bins) + "\n";
  if (cfg.mahalanobis_eps) out += "mahalanobis_eps = " + number_text(*cfg.mahalanobis_eps) + "\n";
  out += "\n[output]\ndir = " + cfg.out_dir.string() + "\n";
  return out;
}

std::filesystem::path resolve_out_dir(const std::filesystem::path& configured) {
  if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
  return configured;
}

}  // namespace idil::cli

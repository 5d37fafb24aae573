// Copyright 2026 The Crossplan Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "crossplan/config.h"

#include <functional>
#include <map>
#include <sstream>

#include "crossplan/error.h"
#include "file_util.h"

namespace crossplan {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream in(value);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(trim(item));
  return out;
}

std::int64_t to_int(const std::string& v, const std::string& key) {
  const double d = internal::parse_double(v, key);
  require(d == static_cast<double>(static_cast<std::int64_t>(d)), ErrorCode::kValidation,
          "expected an integer for " + key);
  return static_cast<std::int64_t>(d);
}

bool to_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  fail(ErrorCode::kValidation, "expected a boolean for " + key);
}

std::vector<double> to_doubles(const std::string& v, const std::string& key) {
  std::vector<double> out;
  for (const std::string& s : split_list(v)) out.push_back(internal::parse_double(s, key));
  return out;
}

template <std::size_t N>
std::array<double, N> to_array(const std::string& v, const std::string& key) {
  const auto d = to_doubles(v, key);
  require(d.size() == N, ErrorCode::kValidation, key + " needs " + std::to_string(N) + " values");
  std::array<double, N> out{};
  std::copy(d.begin(), d.end(), out.begin());
  return out;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + items[i];
  return out;
}

template <typename Range>
std::string join_doubles(const Range& values) {
  std::vector<std::string> items;
  for (double v : values) items.push_back(internal::format_double(v));
  return join(items);
}

using Setter = std::function<void(PipelineConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto int_field = [&t](const std::string& key, auto member) {
      t[key] = [member](PipelineConfig& c, const std::string& v, const std::string& k) {
        c.*member = static_cast<int>(to_int(v, k));
      };
    };
    auto double_field = [&t](const std::string& key, auto member) {
      t[key] = [member](PipelineConfig& c, const std::string& v, const std::string& k) {
        c.*member = internal::parse_double(v, k);
      };
    };
    t["seed"] = [](PipelineConfig& c, const std::string& v, const std::string& k) {
      const auto s = to_int(v, k);
      require(s >= 0, ErrorCode::kValidation, "seed must be non-negative");
      c.seed = static_cast<std::uint64_t>(s);
    };
    t["aux_datasets"] = [](PipelineConfig& c, const std::string& v, const std::string&) {
      c.aux_datasets = split_list(v);
    };
    t["aux_noise_std"] = [](PipelineConfig& c, const std::string& v, const std::string& k) {
      c.aux_noise_std = to_doubles(v, k);
    };
    int_field("aux_records", &PipelineConfig::aux_records);
    t["primary_dataset"] = [](PipelineConfig& c, const std::string& v, const std::string&) { c.primary_dataset = v; };
    double_field("noise_std", &PipelineConfig::noise_std);
    int_field("train_records", &PipelineConfig::train_records);
    int_field("val_records", &PipelineConfig::val_records);
    int_field("test_records", &PipelineConfig::test_records);
    t["maneuver_mix"] = [](PipelineConfig& c, const std::string& v, const std::string& k) {
      c.maneuver_mix = to_array<4>(v, k);
    };
    double_field("transition_prob", &PipelineConfig::transition_prob);
    t["history_steps"] = [](PipelineConfig& c, const std::string& v, const std::string& k) {
      c.schema.history_steps = static_cast<int>(to_int(v, k));
    };
    t["future_steps"] = [](PipelineConfig& c, const std::string& v, const std::string& k) {
      c.schema.future_steps = static_cast<int>(to_int(v, k));
    };
    t["dt"] = [](PipelineConfig& c, const std::string& v, const std::string& k) {
      c.schema.dt = internal::parse_double(v, k);
    };
    t["a_max"] = [](PipelineConfig& c, const std::string& v, const std::string& k) {
      c.limits.a_max = internal::parse_double(v, k);
    };
    t["kappa_max"] = [](PipelineConfig& c, const std::string& v, const std::string& k) {
      c.limits.kappa_max = internal::parse_double(v, k);
    };
    t["v_eps"] = [](PipelineConfig& c, const std::string& v, const std::string& k) {
      c.limits.v_eps = internal::parse_double(v, k);
    };
    t["resolution"] = [](PipelineConfig& c, const std::string& v, const std::string& k) {
      c.resolution = to_array<5>(v, k);
    };
    int_field("n_clusters", &PipelineConfig::n_clusters);
    double_field("alpha", &PipelineConfig::alpha);
    int_field("top_k", &PipelineConfig::top_k);
    int_field("group_n", &PipelineConfig::group_n);
    int_field("future_stride", &PipelineConfig::future_stride);
    double_field("epsilon", &PipelineConfig::epsilon);
    int_field("gftm_hidden", &PipelineConfig::gftm_hidden);
    int_field("gftm_head_hidden", &PipelineConfig::gftm_head_hidden);
    int_field("model_dim", &PipelineConfig::model_dim);
    int_field("head_hidden", &PipelineConfig::head_hidden);
    int_field("hftdn_hidden", &PipelineConfig::hftdn_hidden);
    double_field("gftm_val_fraction", &PipelineConfig::gftm_val_fraction);
    for (const auto& [prefix, member] : {std::pair{"gftm", &PipelineConfig::gftm},
                                         std::pair{"main", &PipelineConfig::main},
                                         std::pair{"hftdn", &PipelineConfig::hftdn}}) {
      const std::string p(prefix);
      t[p + "_epochs"] = [member](PipelineConfig& c, const std::string& v, const std::string& k) {
        (c.*member).epochs = static_cast<int>(to_int(v, k));
      };
      t[p + "_batch"] = [member](PipelineConfig& c, const std::string& v, const std::string& k) {
        (c.*member).batch = static_cast<int>(to_int(v, k));
      };
      t[p + "_lr"] = [member](PipelineConfig& c, const std::string& v, const std::string& k) {
        (c.*member).lr = internal::parse_double(v, k);
      };
    }
    t["s2d_start_open"] = [](PipelineConfig& c, const std::string& v, const std::string& k) {
      c.s2d_start_open = to_bool(v, k);
    };
    t["full_ablation"] = [](PipelineConfig& c, const std::string& v, const std::string& k) {
      c.full_ablation = to_bool(v, k);
    };
    return t;
  }();
  return table;
}

}  // namespace

void PipelineConfig::validate() const {
  schema.validate();
  require(!aux_datasets.empty(), ErrorCode::kValidation, "at least one auxiliary dataset is required");
  require(aux_noise_std.size() == aux_datasets.size(), ErrorCode::kValidation,
          "aux_noise_std needs one value per auxiliary dataset");
  for (const std::string& id : aux_datasets) {
    require(!id.empty() && id != primary_dataset, ErrorCode::kValidation,
            "auxiliary dataset ids must be non-empty and differ from the primary");
  }
  require(aux_records > 0 && train_records > 0 && val_records > 0 && test_records > 0, ErrorCode::kValidation,
          "record counts must be positive");
  for (double r : resolution) require(r > 0.0, ErrorCode::kValidation, "resolution must be positive");
  require(n_clusters >= 1, ErrorCode::kValidation, "n_clusters must be >= 1");
  require(alpha >= 0.0 && alpha <= 1.0, ErrorCode::kValidation, "alpha must lie in [0, 1]");
  require(top_k >= 1 && group_n >= 1 && future_stride >= 1, ErrorCode::kValidation,
          "top_k, group_n and future_stride must be >= 1");
  require(epsilon > 0.0 && epsilon < 1.0, ErrorCode::kValidation, "epsilon must lie in (0, 1)");
  require(gftm_hidden > 0 && gftm_head_hidden > 0 && model_dim > 0 && head_hidden > 0 && hftdn_hidden > 0,
          ErrorCode::kValidation, "model sizes must be positive");
  for (const PhaseOptions* p : {&gftm, &main, &hftdn}) {
    require(p->epochs >= 0 && p->batch > 0 && p->lr > 0.0, ErrorCode::kValidation, "bad phase options");
  }
  require(gftm_val_fraction >= 0.0 && gftm_val_fraction < 1.0, ErrorCode::kValidation,
          "gftm_val_fraction must lie in [0, 1)");
  ScenarioConfig sc;
  sc.maneuver_mix = maneuver_mix;
  sc.transition_prob = transition_prob;
  sc.noise_std = noise_std;
  sc.schema = schema;
  sc.validate();
}

PipelineConfig parse_pipeline_config(const std::string& text) {
  PipelineConfig cfg;
  std::stringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, ErrorCode::kValidation,
            "config line " + std::to_string(number) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto it = setters().find(key);
    require(it != setters().end(), ErrorCode::kValidation,
            "config line " + std::to_string(number) + ": unknown key '" + key + "'");
    it->second(cfg, value, key);
  }
  cfg.validate();
  return cfg;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  return parse_pipeline_config(internal::read_file(path, "config"));
}

std::string serialize_pipeline_config(const PipelineConfig& c) {
  using internal::format_double;
  std::ostringstream o;
  o << "seed = " << c.seed << "\n"
    << "aux_datasets = " << join(c.aux_datasets) << "\n"
    << "aux_noise_std = " << join_doubles(c.aux_noise_std) << "\n"
    << "aux_records = " << c.aux_records << "\n"
    << "primary_dataset = " << c.primary_dataset << "\n"
    << "noise_std = " << format_double(c.noise_std) << "\n"
    << "train_records = " << c.train_records << "\n"
    << "val_records = " << c.val_records << "\n"
    << "test_records = " << c.test_records << "\n"
    << "maneuver_mix = " << join_doubles(c.maneuver_mix) << "\n"
    << "transition_prob = " << format_double(c.transition_prob) << "\n"
    << "history_steps = " << c.schema.history_steps << "\n"
    << "future_steps = " << c.schema.future_steps << "\n"
    << "dt = " << format_double(c.schema.dt) << "\n"
    << "a_max = " << format_double(c.limits.a_max) << "\n"
    << "kappa_max = " << format_double(c.limits.kappa_max) << "\n"
    << "v_eps = " << format_double(c.limits.v_eps) << "\n"
    << "resolution = " << join_doubles(c.resolution) << "\n"
    << "n_clusters = " << c.n_clusters << "\n"
    << "alpha = " << format_double(c.alpha) << "\n"
    << "top_k = " << c.top_k << "\n"
    << "group_n = " << c.group_n << "\n"
    << "future_stride = " << c.future_stride << "\n"
    << "epsilon = " << format_double(c.epsilon) << "\n"
    << "s2d_start_open = " << (c.s2d_start_open ? "true" : "false") << "\n"
    << "gftm_hidden = " << c.gftm_hidden << "\n"
    << "gftm_head_hidden = " << c.gftm_head_hidden << "\n"
    << "model_dim = " << c.model_dim << "\n"
    << "head_hidden = " << c.head_hidden << "\n"
    << "hftdn_hidden = " << c.hftdn_hidden << "\n"
    << "gftm_val_fraction = " << format_double(c.gftm_val_fraction) << "\n";
  for (const auto& [name, p] : {std::pair{"gftm", &c.gftm}, std::pair{"main", &c.main}, std::pair{"hftdn", &c.hftdn}}) {
    o << name << "_epochs = " << p->epochs << "\n"
      << name << "_batch = " << p->batch << "\n"
      << name << "_lr = " << format_double(p->lr) << "\n";
  }
  o << "full_ablation = " << (c.full_ablation ? "true" : "false") << "\n";
  return o.str();
}

}  // namespace crossplan

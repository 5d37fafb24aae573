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

#include "crossplan/analysis.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>

#include "crossplan/error.h"
#include "file_util.h"

namespace crossplan {
namespace {

using Counts = std::array<std::array<std::uint64_t, kNumManeuverClasses>, kNumManeuverClasses>;

ManeuverDistribution finish_distribution(std::string id, const std::array<std::uint64_t, kNumManeuverClasses>& counts) {
  ManeuverDistribution d;
  d.dataset_id = std::move(id);
  d.counts = counts;
  for (std::uint64_t c : counts) d.total += c;
  for (int k = 0; k < kNumManeuverClasses; ++k) {
    d.shares[k] = d.total ? static_cast<double>(counts[k]) / static_cast<double>(d.total) : 0.0;
  }
  return d;
}

TransitionMatrix finish_matrix(std::string id, const Counts& counts) {
  TransitionMatrix m;
  m.dataset_id = std::move(id);
  m.counts = counts;
  for (int h = 0; h < kNumManeuverClasses; ++h) {
    std::uint64_t row = 0;
    for (int f = 0; f < kNumManeuverClasses; ++f) row += counts[h][f];
    m.total += row;
    m.empty_row[h] = row == 0;
    for (int f = 0; f < kNumManeuverClasses; ++f) {
      m.probabilities[h][f] = row ? static_cast<double>(counts[h][f]) / static_cast<double>(row)
                                  : 1.0 / kNumManeuverClasses;
    }
  }
  m.top7_coverage = top_k_coverage(counts, 7);
  return m;
}

}  // namespace

std::vector<ManeuverDistribution> maneuver_distribution(const std::vector<CorpusRecord>& records,
                                                        const ManeuverThresholds& thresholds) {
  require(!records.empty(), ErrorCode::kDegenerateInput, "cannot analyze an empty corpus");
  std::map<std::string, std::array<std::uint64_t, kNumManeuverClasses>> per;
  std::array<std::uint64_t, kNumManeuverClasses> all{};
  for (const CorpusRecord& r : records) {
    const int c = static_cast<int>(classify_maneuver(r.history, thresholds));
    ++per[r.dataset_id][c];
    ++all[c];
  }
  std::vector<ManeuverDistribution> out;
  for (const auto& [id, counts] : per) out.push_back(finish_distribution(id, counts));
  out.push_back(finish_distribution(kAllDatasets, all));
  return out;
}

ManeuverDistribution dictionary_distribution(const TrajectoryDictionary& dict, const ManeuverThresholds& thresholds) {
  require(!dict.empty(), ErrorCode::kDegenerateInput, "cannot analyze an empty dictionary");
  std::array<std::uint64_t, kNumManeuverClasses> counts{};
  for (const DictionaryEntry& e : dict.entries) ++counts[static_cast<int>(classify_maneuver(e.history, thresholds))];
  return finish_distribution("dictionary", counts);
}

double normalized_entropy(const std::array<double, kNumManeuverClasses>& shares) {
  double h = 0.0;
  for (double p : shares) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h / std::log(static_cast<double>(kNumManeuverClasses));
}

double top_k_coverage(const Counts& counts, int k) {
  std::vector<std::uint64_t> cells;
  std::uint64_t total = 0;
  for (const auto& row : counts) {
    for (std::uint64_t c : row) {
      cells.push_back(c);
      total += c;
    }
  }
  if (total == 0) return 0.0;
  std::sort(cells.begin(), cells.end(), std::greater<>());
  std::uint64_t top = 0;
  for (int i = 0; i < std::min<int>(k, static_cast<int>(cells.size())); ++i) top += cells[static_cast<std::size_t>(i)];
  return static_cast<double>(top) / static_cast<double>(total);
}

TransitionMatrix transition_matrix(const std::vector<CorpusRecord>& records, const ManeuverThresholds& thresholds) {
  return transition_matrices(records, thresholds).back();
}

std::vector<TransitionMatrix> transition_matrices(const std::vector<CorpusRecord>& records,
                                                  const ManeuverThresholds& thresholds) {
  require(!records.empty(), ErrorCode::kDegenerateInput, "cannot analyze an empty corpus");
  std::map<std::string, Counts> per;
  Counts all{};
  for (const CorpusRecord& r : records) {
    const int h = static_cast<int>(classify_maneuver(r.history, thresholds));
    const int f = static_cast<int>(classify_maneuver(r.future, thresholds));
    ++per[r.dataset_id][h][f];
    ++all[h][f];
  }
  std::vector<TransitionMatrix> out;
  for (const auto& [id, counts] : per) out.push_back(finish_matrix(id, counts));
  out.push_back(finish_matrix(kAllDatasets, all));
  return out;
}

std::string distribution_tsv(const std::vector<ManeuverDistribution>& rows) {
  std::ostringstream out;
  out << "dataset_id\tclass\tcount\tshare\n";
  for (const ManeuverDistribution& d : rows) {
    for (int k = 0; k < kNumManeuverClasses; ++k) {
      out << d.dataset_id << '\t' << maneuver_name(static_cast<ManeuverClass>(k)) << '\t' << d.counts[k] << '\t'
          << internal::format_double(d.shares[k]) << '\n';
    }
  }
  return out.str();
}

std::string transition_tsv(const std::vector<TransitionMatrix>& matrices) {
  std::ostringstream out;
  out << "dataset_id\thistory_class\tfuture_class\tcount\tprobability\tempty_row\n";
  for (const TransitionMatrix& m : matrices) {
    for (int h = 0; h < kNumManeuverClasses; ++h) {
      for (int f = 0; f < kNumManeuverClasses; ++f) {
        out << m.dataset_id << '\t' << maneuver_name(static_cast<ManeuverClass>(h)) << '\t'
            << maneuver_name(static_cast<ManeuverClass>(f)) << '\t' << m.counts[h][f] << '\t'
            << internal::format_double(m.probabilities[h][f]) << '\t' << (m.empty_row[h] ? 1 : 0) << '\n';
      }
    }
  }
  return out.str();
}

std::string transition_summary_tsv(const std::vector<TransitionMatrix>& matrices) {
  std::ostringstream out;
  out << "dataset_id\ttotal\ttop7_coverage\n";
  for (const TransitionMatrix& m : matrices) {
    out << m.dataset_id << '\t' << m.total << '\t' << internal::format_double(m.top7_coverage) << '\n';
  }
  return out.str();
}

void write_analysis(const std::vector<CorpusRecord>& records, const std::filesystem::path& out_dir) {
  const auto dist = maneuver_distribution(records);
  const auto trans = transition_matrices(records);
  internal::write_file(out_dir / "maneuver_distribution.tsv", distribution_tsv(dist), "analysis table");
  internal::write_file(out_dir / "transition_matrix.tsv", transition_tsv(trans), "analysis table");
  internal::write_file(out_dir / "transition_summary.tsv", transition_summary_tsv(trans), "analysis table");
}

}  // namespace crossplan

#include "hloc/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>

#include "hloc/error.hpp"
#include "hloc/parallel.hpp"
#include "hloc/syntax.hpp"

namespace hloc {
namespace {

std::string group_of(const GenerationRecord& r, GroupField field) {
  return field == GroupField::Model ? r.model : r.dataset;
}

void check_aligned(std::span<const GenerationRecord> records, std::span<const std::vector<TokenAnnotation>> annotations) {
  if (records.size() != annotations.size()) throw Error(ErrorKind::Data, "records and annotations differ in count");
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (annotations[i].size() != records[i].tokens.size()) {
      throw Error(ErrorKind::Data, "annotations for record '" + records[i].id + "' do not match its tokens");
    }
  }
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::string_view to_string(RateDenominator d) { return d == RateDenominator::Prefix ? "prefix" : "all"; }

RateDenominator parse_rate_denominator(std::string_view name) {
  if (name == "prefix") return RateDenominator::Prefix;
  if (name == "all") return RateDenominator::All;
  throw Error(ErrorKind::Usage, "rate denominator must be prefix or all");
}

std::vector<std::vector<TokenAnnotation>> annotate_all(std::span<const GenerationRecord> records, unsigned jobs) {
  std::vector<std::vector<TokenAnnotation>> out(records.size());
  parallel_for(records.size(), jobs, [&](std::size_t i) { out[i] = annotate_tokens(records[i]); });
  return out;
}

std::optional<double> TypeTable::get(const std::string& group, TokenType type) const {
  auto g = cells.find(group);
  if (g == cells.end()) return std::nullopt;
  auto c = g->second.find(type);
  if (c == g->second.end()) return std::nullopt;
  return c->second.value;
}

nlohmann::json TypeTable::to_json() const {
  nlohmann::json out = {{"measure", measure}, {"groups", groups}};
  nlohmann::json rows = nlohmann::json::object();
  for (const auto& [g, types] : cells) {
    nlohmann::json row = nlohmann::json::object();
    for (const auto& [t, c] : types) {
      row[std::string(to_string(t))] = {{"value", c.value}, {"numerator", c.numerator}, {"denominator", c.denominator}};
    }
    rows[g] = row;
  }
  out["cells"] = rows;
  return out;
}

std::string TypeTable::to_csv() const {
  std::ostringstream out;
  out << "type";
  for (const std::string& g : groups) out << ',' << g;
  out << '\n';
  for (TokenType t : kAllTokenTypes) {
    out << to_string(t);
    for (const std::string& g : groups) {
      out << ',';
      if (auto v = get(g, t)) out << format_double(*v);
    }
    out << '\n';
  }
  return out.str();
}

TypeTable type_rate_table(std::span<const GenerationRecord> records,
                          std::span<const std::vector<TokenAnnotation>> annotations, RateDenominator denominator,
                          GroupField group) {
  check_aligned(records, annotations);
  TypeTable table;
  table.measure = "rate";
  std::map<std::string, std::map<TokenType, TypeCell>> counts;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const GenerationRecord& r = records[i];
    if (!r.gold_index) throw Error(ErrorKind::Data, "record '" + r.id + "' has no gold index");
    auto& row = counts[group_of(r, group)];
    for (const TokenAnnotation& a : annotations[i]) {
      if (denominator == RateDenominator::Prefix && a.token_index > *r.gold_index) break;
      TypeCell& c = row[a.type];
      ++c.denominator;
      if (a.token_index == *r.gold_index) ++c.numerator;
    }
  }
  for (auto& [g, row] : counts) {
    table.groups.push_back(g);
    for (auto& [t, c] : row) c.value = static_cast<double>(c.numerator) / static_cast<double>(c.denominator);
  }
  table.cells = std::move(counts);
  return table;
}

TypeTable type_proportion_table(std::span<const GenerationRecord> records,
                                std::span<const std::vector<TokenAnnotation>> annotations, GroupField group) {
  check_aligned(records, annotations);
  TypeTable table;
  table.measure = "proportion";
  std::map<std::string, std::map<TokenType, TypeCell>> counts;
  std::map<std::string, std::size_t> totals;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const std::string g = group_of(records[i], group);
    auto& row = counts[g];
    for (const TokenAnnotation& a : annotations[i]) {
      ++row[a.type].numerator;
      ++totals[g];
    }
  }
  for (auto& [g, row] : counts) {
    if (totals[g] == 0) continue;
    table.groups.push_back(g);
    for (auto& [t, c] : row) {
      c.denominator = totals[g];
      c.value = static_cast<double>(c.numerator) / static_cast<double>(c.denominator);
    }
    table.cells[g] = row;
  }
  return table;
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

Summary summarize(std::vector<double> values, double lo, double hi, int bins) {
  Summary s;
  std::sort(values.begin(), values.end());
  s.count = values.size();
  if (!values.empty()) {
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    s.min = values.front();
    s.max = values.back();
    s.q25 = quantile_sorted(values, 0.25);
    s.median = quantile_sorted(values, 0.5);
    s.q75 = quantile_sorted(values, 0.75);
  }
  s.histogram.assign(static_cast<std::size_t>(bins), 0);
  for (int b = 0; b <= bins; ++b) s.bin_edges.push_back(lo + (hi - lo) * b / bins);
  for (double v : values) {
    int b = hi > lo ? static_cast<int>((v - lo) / (hi - lo) * bins) : 0;
    b = std::clamp(b, 0, bins - 1);
    ++s.histogram[static_cast<std::size_t>(b)];
  }
  return s;
}

const DistributionEntry* DistributionReport::find(const std::string& dimension, const std::string& group,
                                                  const std::string& signal, const std::string& role) const {
  for (const DistributionEntry& e : entries) {
    if (e.dimension == dimension && e.group == group && e.signal == signal && e.role == role) return &e;
  }
  return nullptr;
}

nlohmann::json DistributionReport::to_json() const {
  nlohmann::json out = nlohmann::json::array();
  for (const DistributionEntry& e : entries) {
    const Summary& s = e.summary;
    out.push_back({{"dimension", e.dimension},
                   {"group", e.group},
                   {"signal", e.signal},
                   {"role", e.role},
                   {"count", s.count},
                   {"mean", s.mean},
                   {"min", s.min},
                   {"q25", s.q25},
                   {"median", s.median},
                   {"q75", s.q75},
                   {"max", s.max},
                   {"bin_edges", s.bin_edges},
                   {"histogram", s.histogram}});
  }
  return out;
}

DistributionReport distribution_report(std::span<const GenerationRecord> records,
                                       std::span<const std::vector<TokenAnnotation>> annotations) {
  check_aligned(records, annotations);
  // dimension -> group -> signal -> role -> values
  using Values = std::map<std::string, std::map<std::string, std::vector<double>>>;
  std::map<std::string, std::map<std::string, Values>> pools;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const GenerationRecord& r = records[i];
    if (!r.gold_index) throw Error(ErrorKind::Data, "record '" + r.id + "' has no gold index");
    for (const TokenAnnotation& a : annotations[i]) {
      if (a.token_index > *r.gold_index) break;
      const std::string role = a.token_index == *r.gold_index ? "gold" : "pre_gold";
      for (const auto& [dim, g] : {std::pair<std::string, std::string>{"model", r.model},
                                   {"dataset", r.dataset},
                                   {"type", std::string(to_string(a.type))}}) {
        pools[dim][g]["chosen_prob"][role].push_back(a.chosen_prob);
        pools[dim][g]["entropy"][role].push_back(a.entropy);
      }
    }
  }
  DistributionReport report;
  const double entropy_hi = std::log(static_cast<double>(kProbabilitySlots));
  for (const auto& [dim, groups] : pools) {
    for (const auto& [g, signals] : groups) {
      for (const auto& [signal, roles] : signals) {
        for (const auto& [role, values] : roles) {
          if (values.empty()) continue;
          const double hi = signal == "entropy" ? std::max(entropy_hi, *std::max_element(values.begin(), values.end()))
                                                : 1.0;
          report.entries.push_back({dim, g, signal, role, summarize(values, 0.0, hi)});
        }
      }
    }
  }
  return report;
}

}  // namespace hloc

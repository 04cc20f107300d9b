#pragma once

// Weight tables over Omega^k and finite weight families (Psi_k, P_k).

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fcav/common.hpp"

namespace fcav {

// Tables are stored in row-major lexicographic order of Omega^k: the first
// coordinate is the most significant digit.

inline std::size_t encode_config(std::span<const int> spins, int q) {
  std::size_t index = 0;
  for (int s : spins) index = index * static_cast<std::size_t>(q) + static_cast<std::size_t>(s);
  return index;
}

inline void decode_config(std::size_t index, int q, std::span<int> out) {
  for (std::size_t i = out.size(); i-- > 0;) {
    out[i] = static_cast<int>(index % static_cast<std::size_t>(q));
    index /= static_cast<std::size_t>(q);
  }
}

/// Stride of coordinate j in a table of the given arity.
inline std::size_t coordinate_stride(int q, int arity, int j) {
  return ipow(static_cast<std::size_t>(q), arity - 1 - j);
}

struct WeightTable {
  int arity = 0;
  std::vector<double> values;
  std::string label;
  /// ln of the per-factor constant divided out of the physical weight
  /// (zero unless the model stores normalised tables).
  double log_normalizer = 0.0;

  double at(std::size_t index) const { return values[index]; }
  double operator()(std::span<const int> spins, int q) const { return values[encode_config(spins, q)]; }
};

/// q^{1-k} * sum over configurations with coordinate j equal to omega.
inline double coordinate_marginal(const WeightTable& table, int q, int j, int omega) {
  const std::size_t size = table.values.size();
  const std::size_t stride = coordinate_stride(q, table.arity, j);
  double total = 0.0;
  for (std::size_t idx = 0; idx < size; ++idx)
    if (static_cast<int>((idx / stride) % static_cast<std::size_t>(q)) == omega) total += table.values[idx];
  return total / static_cast<double>(ipow(static_cast<std::size_t>(q), table.arity - 1));
}

class WeightFamily {
 public:
  struct ArityBlock {
    std::vector<WeightTable> tables;
    std::vector<double> masses;
    std::vector<double> cumulative;
    /// E[psi_k(sigma)] over P_k.
    std::vector<double> expected;
  };

  explicit WeightFamily(int q) : q_(q) { require(q >= 1, "weight family: alphabet size must be >= 1"); }

  int q() const { return q_; }

  void add(WeightTable table, double mass) {
    require(table.arity >= 1, "weight table: arity must be >= 1");
    require(table.values.size() == ipow(static_cast<std::size_t>(q_), table.arity),
            "weight table: expected q^k entries");
    require(mass >= 0.0 && std::isfinite(mass), "weight table: invalid mass");
    for (double v : table.values) require(std::isfinite(v), "weight table: non-finite entry");
    ArityBlock& block = blocks_[table.arity];
    block.tables.push_back(std::move(table));
    block.masses.push_back(mass);
    rebuild(block);
  }

  std::vector<int> arities() const {
    std::vector<int> out;
    for (const auto& [k, block] : blocks_) out.push_back(k);
    return out;
  }
  bool supports(int k) const { return blocks_.count(k) > 0; }

  const ArityBlock& block(int k) const {
    const auto it = blocks_.find(k);
    if (it == blocks_.end()) throw Error(ErrorCode::InvalidArgument, "weight family has no arity " + std::to_string(k));
    return it->second;
  }
  const std::vector<WeightTable>& tables(int k) const { return block(k).tables; }
  const std::vector<double>& masses(int k) const { return block(k).masses; }
  const WeightTable& table(int k, int id) const { return block(k).tables.at(static_cast<std::size_t>(id)); }
  std::span<const double> expected_table(int k) const { return block(k).expected; }

  int sample_index(int k, Rng& rng) const {
    return static_cast<int>(sample_cumulative(block(k).cumulative, rng));
  }

  /// Checks that each arity's masses sum to one.
  void validate(double tol = 1e-12) const {
    require(!blocks_.empty(), "weight family: no tables");
    for (const auto& [k, block] : blocks_) {
      double s = 0.0;
      for (double p : block.masses) s += p;
      require(std::abs(s - 1.0) <= tol, "weight family: masses of arity " + std::to_string(k) + " sum to " +
                                            std::to_string(s));
    }
  }

  double min_entry() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& [k, block] : blocks_)
      for (const auto& t : block.tables)
        for (double v : t.values) m = std::min(m, v);
    return m;
  }
  double max_entry() const {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& [k, block] : blocks_)
      for (const auto& t : block.tables)
        for (double v : t.values) m = std::max(m, v);
    return m;
  }

  /// The common coordinate marginal when it exists (SYM), else nullopt.
  std::optional<double> xi(double tol = 1e-9) const {
    std::optional<double> ref;
    if (min_entry() <= 0.0) return std::nullopt;
    for (const auto& [k, block] : blocks_)
      for (const auto& t : block.tables)
        for (int j = 0; j < k; ++j)
          for (int w = 0; w < q_; ++w) {
            const double v = coordinate_marginal(t, q_, j, w);
            if (!ref) ref = v;
            else if (std::abs(v - *ref) > tol * std::max(1.0, std::abs(*ref))) return std::nullopt;
          }
    return ref;
  }

  /// Copy of the family with spin labels permuted: psi'(s) = psi(perm(s)).
  WeightFamily relabeled(std::span<const int> perm) const {
    require(static_cast<int>(perm.size()) == q_, "relabel: permutation size");
    WeightFamily out(q_);
    std::vector<int> config;
    for (const auto& [k, block] : blocks_) {
      config.assign(static_cast<std::size_t>(k), 0);
      std::vector<int> mapped(static_cast<std::size_t>(k));
      for (std::size_t t = 0; t < block.tables.size(); ++t) {
        WeightTable copy = block.tables[t];
        for (std::size_t idx = 0; idx < copy.values.size(); ++idx) {
          decode_config(idx, q_, config);
          for (int i = 0; i < k; ++i) mapped[static_cast<std::size_t>(i)] = perm[static_cast<std::size_t>(config[static_cast<std::size_t>(i)])];
          copy.values[idx] = block.tables[t].values[encode_config(mapped, q_)];
        }
        out.add(std::move(copy), block.masses[t]);
      }
    }
    return out;
  }

 private:
  void rebuild(ArityBlock& block) const {
    block.cumulative.clear();
    double c = 0.0;
    for (double p : block.masses) {
      c += p;
      block.cumulative.push_back(c);
    }
    const std::size_t size = block.tables.front().values.size();
    block.expected.assign(size, 0.0);
    for (std::size_t t = 0; t < block.tables.size(); ++t)
      for (std::size_t idx = 0; idx < size; ++idx)
        block.expected[idx] += block.masses[t] * block.tables[t].values[idx];
    if (c > 0.0)
      for (double& e : block.expected) e /= c;
  }

  int q_;
  std::map<int, ArityBlock> blocks_;
};

using FamilyPtr = std::shared_ptr<const WeightFamily>;

}  // namespace fcav

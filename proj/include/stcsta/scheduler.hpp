#pragma once

// Cluster-head scheduling: forward-fill, pairwise Pearson correlation, best-match
// table, occurrence ordering and complementary reduction allocation.

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "stcsta/core.hpp"

namespace stcsta {

// Replaces every NaN with the nearest preceding present value.
// Throws std::domain_error when element 0 is missing.
std::vector<double> forward_fill(std::span<const double> row);
ReadingMatrix forward_fill(const ReadingMatrix& matrix);

// Sample Pearson coefficient with (n - 1) normalisation; 0 when either input is constant.
// Throws std::invalid_argument on length mismatch or n < 2.
double pearson(std::span<const double> u, std::span<const double> v);

// Strict upper triangle of the symmetric N x N correlation matrix.
class CorrelationMatrix {
  public:
    explicit CorrelationMatrix(std::size_t n) : n_(n), values_(n < 2 ? 0 : n * (n - 1) / 2, 0.0) {}

    std::size_t size() const { return n_; }
    std::size_t pair_count() const { return values_.size(); }

    // Symmetric access; i != j.
    double at(std::size_t i, std::size_t j) const { return values_[index(i, j)]; }
    void set(std::size_t i, std::size_t j, double rho) { values_[index(i, j)] = rho; }

  private:
    std::size_t index(std::size_t i, std::size_t j) const
    {
        if (i > j)
            std::swap(i, j);
        // Row-major offset of (i, j), j > i, in the packed upper triangle.
        return i * n_ - i * (i + 1) / 2 + (j - i - 1);
    }

    std::size_t n_;
    std::vector<double> values_;
};

// All N(N-1)/2 pairwise coefficients of a dense matrix (no NaN; throws std::domain_error otherwise).
CorrelationMatrix correlation_matrix(const ReadingMatrix& matrix);

// For each stream the partner with the largest coefficient; ties go to the smallest index.
// Requires N >= 2 (throws std::invalid_argument).
CorrelationTable best_match_table(const CorrelationMatrix& corr);

struct OccurrenceEntry {
    std::size_t stream = 0;
    std::size_t count = 0;
};

// Streams that appear as someone's best match, ascending by count; equal counts keep
// first-appearance order when scanning the table by ascending stream index.
using OccurrenceOrder = std::vector<OccurrenceEntry>;

OccurrenceOrder occurrence_order(const CorrelationTable& table);

// Walks `order`: a stream whose match is still undecided is reduced by its own correlation,
// otherwise by the complement of its match's reduction. Unmatched streams then take the
// complement of their match.
SamplingSchedule allocate_reductions(const CorrelationTable& table, const OccurrenceOrder& order, int sr_max);

// Ablation: every stream is reduced by its own best correlation, without compensation.
SamplingSchedule exaggerated_allocate(const CorrelationTable& table, int sr_max);

}  // namespace stcsta

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "carshare/diary.hpp"

namespace carshare::cluster {

// Edit distance (unit-cost insert, delete, substitute). Common prefix and
// suffix are stripped, then a diagonal band is widened by doubling until the
// banded result is provably exact.
std::size_t levenshtein(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);
std::size_t levenshtein(std::string_view a, std::string_view b);
std::size_t levenshtein(const diary::DaySequence& a, const diary::DaySequence& b);

std::vector<std::uint8_t> block_codes(const diary::DaySequence& s);

// Symmetric matrix with zero diagonal stored as the condensed upper
// triangle: entry (i, j), i < j, at i*n - i*(i+1)/2 + (j - i - 1).
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  explicit DistanceMatrix(std::size_t n);

  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const;
  void set(std::size_t i, std::size_t j, double v);
  const std::vector<double>& condensed() const { return d_; }
  std::vector<double>& condensed() { return d_; }

  bool operator==(const DistanceMatrix&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> d_;
};

inline std::size_t condensed_index(std::size_t n, std::size_t i, std::size_t j) {
  return i * n - i * (i + 1) / 2 + (j - i - 1);
}

// Bytes needed to hold the matrix plus the clustering working copy.
std::size_t clustering_memory_bytes(std::size_t n);

enum class Exec { serial, parallel };

struct DistanceOptions {
  Exec exec = Exec::parallel;
  std::size_t memory_limit_bytes = std::size_t{4} << 30;
};

// All pairwise edit distances. Throws UserError for fewer than two
// sequences or when clustering_memory_bytes exceeds the limit.
DistanceMatrix distance_matrix(const std::vector<std::vector<std::uint8_t>>& seqs,
                               const DistanceOptions& options = {});
DistanceMatrix distance_matrix(const std::vector<diary::DaySequence>& seqs,
                               const DistanceOptions& options = {});

// Little-endian binary layout: "CSDM", uint32 version (1), uint64 n, then
// n(n-1)/2 IEEE-754 float64 values of the condensed upper triangle.
void write_distance_matrix(const DistanceMatrix& d, std::ostream& out);
DistanceMatrix read_distance_matrix(std::istream& in);

struct Merge {
  std::size_t a = 0;  // cluster ids: leaves are 0..n-1, merge s creates id n+s
  std::size_t b = 0;
  double height = 0.0;
  std::size_t size = 0;
};

struct Dendrogram {
  std::size_t leaf_count = 0;
  std::vector<Merge> merges;
  // Heights are non-decreasing. Ward on a non-Euclidean dissimilarity can
  // violate this; callers report it as a warning.
  bool monotone() const;
};

struct WardOptions {
  // Lance-Williams recurrence on squared distances, heights reported as the
  // square root. When false the recurrence runs on the raw distances.
  bool squared = true;
};

// Ward linkage. Among equal minimal pairs the lowest (slot, slot) pair is
// merged, where a cluster's slot is its smallest leaf index.
Dendrogram hac_ward(const DistanceMatrix& d, const WardOptions& options = {});

// Labels 1..k obtained by applying the first n-k merges. With per-leaf
// daily distances, labels are ordered by descending cluster mean (label 1 =
// longest daily distance); otherwise by smallest member leaf.
std::vector<int> cut_dendrogram(const Dendrogram& dg, std::size_t k,
                                std::span<const double> leaf_daily_km = {});

struct ClusterStats {
  int cluster_id = 0;
  LocationType location_type = LocationType::metropolis;
  std::size_t n_sequences = 0;
  std::optional<double> mean_daily_distance_km;
  std::optional<double> mean_trip_distance_km;
  std::optional<double> mean_trip_duration_min;
  std::optional<double> mean_trips_per_day;
};

// Daily kilometres per sequence, from the trips with the same person-day.
std::vector<double> daily_distance(const std::vector<diary::DaySequence>& seqs,
                                   const std::vector<diary::TripRecord>& trips);

// Stats for clusters 1..k. Empty clusters get n_sequences = 0 and no means.
std::vector<ClusterStats> cluster_stats(LocationType location, std::size_t k,
                                        const std::vector<int>& labels,
                                        const std::vector<diary::DaySequence>& seqs,
                                        const std::vector<diary::TripRecord>& trips);

// Indices (sorted) of a seeded random subsample of at most max_total
// sequences, allocated across (location, day type) strata in proportion to
// their size (largest remainder).
std::vector<std::size_t> stratified_subsample(const std::vector<diary::DaySequence>& seqs,
                                              std::size_t max_total, std::uint64_t seed);

void write_merges(const Dendrogram& dg, std::ostream& out);
void write_heights(const Dendrogram& dg, std::ostream& out);
void write_cluster_stats(const std::vector<ClusterStats>& stats, std::ostream& out);

}  // namespace carshare::cluster

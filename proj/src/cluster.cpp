#include "carshare/cluster.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <unordered_map>

#include "carshare/error.hpp"
#include "carshare/io.hpp"
#include "carshare/rng.hpp"

namespace carshare::cluster {

namespace {

constexpr std::size_t big = std::numeric_limits<std::size_t>::max() / 4;

// Edit distance restricted to the diagonal band |i - j| <= k. Exact
// whenever the true distance is <= k. Requires |n - m| <= k.
template <typename T>
std::size_t banded(const T* a, std::size_t n, const T* b, std::size_t m, std::size_t k) {
  thread_local std::vector<std::size_t> prev, cur;
  prev.assign(m + 2, big);
  cur.assign(m + 2, big);
  for (std::size_t j = 0; j <= std::min(m, k); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    const std::size_t lo = i > k ? i - k : 0;
    const std::size_t hi = std::min(m, i + k);
    if (lo > 0) cur[lo - 1] = big;
    std::size_t j = lo;
    if (lo == 0) {
      cur[0] = i;
      j = 1;
    }
    const T ai = a[i - 1];
    for (; j <= hi; ++j) {
      std::size_t v = prev[j - 1] + (ai == b[j - 1] ? 0 : 1);
      v = std::min(v, prev[j] + 1);
      v = std::min(v, cur[j - 1] + 1);
      cur[j] = v;
    }
    if (hi + 1 <= m) cur[hi + 1] = big;
    std::swap(prev, cur);
  }
  return prev[m];
}

template <typename T>
std::size_t edit_distance(const T* a, std::size_t n, const T* b, std::size_t m) {
  while (n > 0 && m > 0 && a[0] == b[0]) {
    ++a;
    ++b;
    --n;
    --m;
  }
  while (n > 0 && m > 0 && a[n - 1] == b[m - 1]) {
    --n;
    --m;
  }
  if (n == 0) return m;
  if (m == 0) return n;
  if (n > m) {
    std::swap(a, b);
    std::swap(n, m);
  }
  // Upper bound: substitute the first n symbols, insert the rest. An
  // alignment of cost d never leaves the band |i - j| <= d.
  std::size_t upper = m - n;
  for (std::size_t i = 0; i < n; ++i) upper += a[i] != b[i];
  std::size_t k = std::max<std::size_t>(m - n, 8);
  while (true) {
    if (k >= upper) return banded(a, n, b, m, upper);
    const std::size_t d = banded(a, n, b, m, k);
    if (d <= k) return d;
    k *= 2;
  }
}

}  // namespace

std::size_t levenshtein(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  return edit_distance(a.data(), a.size(), b.data(), b.size());
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  return edit_distance(a.data(), a.size(), b.data(), b.size());
}

std::size_t levenshtein(const diary::DaySequence& a, const diary::DaySequence& b) {
  static_assert(sizeof(diary::BlockState) == 1);
  return edit_distance(reinterpret_cast<const std::uint8_t*>(a.blocks.data()), a.blocks.size(),
                       reinterpret_cast<const std::uint8_t*>(b.blocks.data()), b.blocks.size());
}

std::vector<std::uint8_t> block_codes(const diary::DaySequence& s) {
  std::vector<std::uint8_t> out(s.blocks.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<std::uint8_t>(s.blocks[i]);
  return out;
}

DistanceMatrix::DistanceMatrix(std::size_t n) : n_(n), d_(n > 1 ? n * (n - 1) / 2 : 0, 0.0) {}

double DistanceMatrix::operator()(std::size_t i, std::size_t j) const {
  if (i == j) return 0.0;
  if (i > j) std::swap(i, j);
  return d_[condensed_index(n_, i, j)];
}

void DistanceMatrix::set(std::size_t i, std::size_t j, double v) {
  if (i == j) return;
  if (i > j) std::swap(i, j);
  d_[condensed_index(n_, i, j)] = v;
}

std::size_t clustering_memory_bytes(std::size_t n) {
  return n * (n > 0 ? n - 1 : 0) / 2 * sizeof(double) * 2;
}

DistanceMatrix distance_matrix(const std::vector<std::vector<std::uint8_t>>& seqs,
                               const DistanceOptions& options) {
  const std::size_t n = seqs.size();
  if (n < 2) throw UserError("distance matrix needs at least two sequences");
  if (clustering_memory_bytes(n) > options.memory_limit_bytes)
    throw UserError("distance matrix for " + std::to_string(n) + " sequences needs " +
                    std::to_string(clustering_memory_bytes(n) >> 20) +
                    " MiB; partition by location type or subsample");
  DistanceMatrix d(n);
  auto& out = d.condensed();
  if (options.exec == Exec::serial) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        out[condensed_index(n, i, j)] = static_cast<double>(levenshtein(seqs[i], seqs[j]));
    return d;
  }
  const auto rows = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (long long ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    for (std::size_t j = i + 1; j < n; ++j)
      out[condensed_index(n, i, j)] = static_cast<double>(levenshtein(seqs[i], seqs[j]));
  }
  return d;
}

DistanceMatrix distance_matrix(const std::vector<diary::DaySequence>& seqs,
                               const DistanceOptions& options) {
  std::vector<std::vector<std::uint8_t>> codes;
  codes.reserve(seqs.size());
  for (const auto& s : seqs) codes.push_back(block_codes(s));
  return distance_matrix(codes, options);
}

namespace {

template <typename T>
void put(std::ostream& out, T v) {
  std::array<char, sizeof(T)> buf;
  std::memcpy(buf.data(), &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf.begin(), buf.end());
  out.write(buf.data(), buf.size());
}

template <typename T>
T get(std::istream& in) {
  std::array<char, sizeof(T)> buf;
  if (!in.read(buf.data(), buf.size())) throw UserError("distance matrix file is truncated");
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf.begin(), buf.end());
  T v;
  std::memcpy(&v, buf.data(), sizeof(T));
  return v;
}

}  // namespace

void write_distance_matrix(const DistanceMatrix& d, std::ostream& out) {
  out.write("CSDM", 4);
  put<std::uint32_t>(out, 1);
  put<std::uint64_t>(out, d.size());
  for (double v : d.condensed()) put<double>(out, v);
}

DistanceMatrix read_distance_matrix(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "CSDM", 4) != 0)
    throw UserError("not a distance matrix file (bad magic)");
  if (auto version = get<std::uint32_t>(in); version != 1)
    throw UserError("unsupported distance matrix version " + std::to_string(version));
  const auto n = get<std::uint64_t>(in);
  DistanceMatrix d(static_cast<std::size_t>(n));
  for (auto& v : d.condensed()) v = get<double>(in);
  return d;
}

bool Dendrogram::monotone() const {
  for (std::size_t s = 1; s < merges.size(); ++s)
    if (merges[s].height < merges[s - 1].height) return false;
  return true;
}

Dendrogram hac_ward(const DistanceMatrix& d, const WardOptions& options) {
  const std::size_t n = d.size();
  Dendrogram dg;
  dg.leaf_count = n;
  if (n < 2) return dg;

  std::vector<double> D = d.condensed();
  if (options.squared)
    for (auto& v : D) v *= v;
  auto at = [&](std::size_t i, std::size_t j) -> double& {
    return i < j ? D[condensed_index(n, i, j)] : D[condensed_index(n, j, i)];
  };

  constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<char> active(n, 1);
  std::vector<std::size_t> size(n, 1), id(n), nn(n, none);
  std::vector<double> nd(n, inf);
  std::iota(id.begin(), id.end(), std::size_t{0});

  // Nearest active neighbour with a larger slot; ties keep the lowest slot.
  auto refresh = [&](std::size_t i) {
    nn[i] = none;
    nd[i] = inf;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!active[j]) continue;
      const double v = D[condensed_index(n, i, j)];
      if (v < nd[i] || nn[i] == none) {
        nd[i] = v;
        nn[i] = j;
      }
    }
  };
  for (std::size_t i = 0; i + 1 < n; ++i) refresh(i);

  dg.merges.reserve(n - 1);
  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::size_t i = none;
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || nn[k] == none) continue;
      if (i == none || nd[k] < nd[i]) i = k;
    }
    const std::size_t j = nn[i];
    const double dij = at(i, j);
    const double ni = static_cast<double>(size[i]);
    const double nj = static_cast<double>(size[j]);
    dg.merges.push_back({std::min(id[i], id[j]), std::max(id[i], id[j]),
                         options.squared ? std::sqrt(std::max(dij, 0.0)) : dij,
                         size[i] + size[j]});

    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == i || k == j) continue;
      const double nk = static_cast<double>(size[k]);
      at(i, k) = ((ni + nk) * at(i, k) + (nj + nk) * at(j, k) - nk * dij) / (ni + nj + nk);
    }
    size[i] += size[j];
    active[j] = 0;
    id[i] = n + step;

    refresh(i);
    for (std::size_t k = 0; k < j; ++k) {
      if (!active[k] || k == i) continue;
      if (nn[k] == i || nn[k] == j) {
        refresh(k);
      } else if (k < i) {
        const double v = at(k, i);
        if (v < nd[k] || (v == nd[k] && i < nn[k])) {
          nd[k] = v;
          nn[k] = i;
        }
      }
    }
  }
  return dg;
}

std::vector<int> cut_dendrogram(const Dendrogram& dg, std::size_t k, std::span<const double> leaf_daily_km) {
  const std::size_t n = dg.leaf_count;
  if (k < 1 || k > n)
    throw UserError("cluster count " + std::to_string(k) + " outside 1.." + std::to_string(n));
  if (!leaf_daily_km.empty() && leaf_daily_km.size() != n)
    throw UserError("per-leaf distances do not match the dendrogram size");

  std::vector<std::size_t> parent(n), rep(2 * n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  std::iota(rep.begin(), rep.begin() + static_cast<long>(n), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t s = 0; s + k < n; ++s) {
    const auto& m = dg.merges[s];
    const std::size_t ra = find(rep[m.a]), rb = find(rep[m.b]);
    parent[std::max(ra, rb)] = std::min(ra, rb);
    rep[n + s] = std::min(ra, rb);
  }

  // Clusters in order of their smallest leaf.
  std::vector<std::size_t> root_of(n);
  std::vector<std::size_t> roots;
  std::unordered_map<std::size_t, std::size_t> slot;
  for (std::size_t leaf = 0; leaf < n; ++leaf) {
    const std::size_t r = find(leaf);
    auto [it, fresh] = slot.try_emplace(r, roots.size());
    if (fresh) roots.push_back(r);
    root_of[leaf] = it->second;
  }
  std::vector<std::size_t> order(roots.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (!leaf_daily_km.empty()) {
    std::vector<double> sum(roots.size(), 0.0), cnt(roots.size(), 0.0);
    for (std::size_t leaf = 0; leaf < n; ++leaf) {
      sum[root_of[leaf]] += leaf_daily_km[leaf];
      cnt[root_of[leaf]] += 1.0;
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return sum[a] / cnt[a] > sum[b] / cnt[b];
    });
  }
  std::vector<int> label_of(roots.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) label_of[order[pos]] = static_cast<int>(pos + 1);
  std::vector<int> labels(n);
  for (std::size_t leaf = 0; leaf < n; ++leaf) labels[leaf] = label_of[root_of[leaf]];
  return labels;
}

std::vector<double> daily_distance(const std::vector<diary::DaySequence>& seqs,
                                   const std::vector<diary::TripRecord>& trips) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < seqs.size(); ++i) index.emplace(seqs[i].person_day_id, i);
  std::vector<double> km(seqs.size(), 0.0);
  for (const auto& t : trips)
    if (auto it = index.find(t.person_day_id); it != index.end()) km[it->second] += t.distance_km;
  return km;
}

std::vector<ClusterStats> cluster_stats(LocationType location, std::size_t k,
                                        const std::vector<int>& labels,
                                        const std::vector<diary::DaySequence>& seqs,
                                        const std::vector<diary::TripRecord>& trips) {
  if (labels.size() != seqs.size()) throw UserError("labels do not cover all sequences");
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < seqs.size(); ++i) index.emplace(seqs[i].person_day_id, i);

  struct Acc {
    std::size_t seqs = 0, trips = 0;
    double km = 0.0, minutes = 0.0;
  };
  std::vector<Acc> acc(k);
  for (int l : labels) {
    if (l < 1 || static_cast<std::size_t>(l) > k)
      throw UserError("cluster label " + std::to_string(l) + " outside 1.." + std::to_string(k));
    ++acc[static_cast<std::size_t>(l - 1)].seqs;
  }
  for (const auto& t : trips) {
    auto it = index.find(t.person_day_id);
    if (it == index.end()) continue;
    auto& a = acc[static_cast<std::size_t>(labels[it->second] - 1)];
    ++a.trips;
    a.km += t.distance_km;
    a.minutes += t.duration_min;
  }
  std::vector<ClusterStats> out;
  for (std::size_t c = 0; c < k; ++c) {
    ClusterStats s;
    s.cluster_id = static_cast<int>(c + 1);
    s.location_type = location;
    s.n_sequences = acc[c].seqs;
    if (acc[c].seqs > 0) {
      const double days = static_cast<double>(acc[c].seqs);
      s.mean_daily_distance_km = acc[c].km / days;
      s.mean_trips_per_day = static_cast<double>(acc[c].trips) / days;
      if (acc[c].trips > 0) {
        s.mean_trip_distance_km = acc[c].km / static_cast<double>(acc[c].trips);
        s.mean_trip_duration_min = acc[c].minutes / static_cast<double>(acc[c].trips);
      }
    }
    out.push_back(s);
  }
  return out;
}

std::vector<std::size_t> stratified_subsample(const std::vector<diary::DaySequence>& seqs,
                                              std::size_t max_total, std::uint64_t seed) {
  const std::size_t n = seqs.size();
  std::vector<std::size_t> picked;
  if (max_total >= n) {
    picked.resize(n);
    std::iota(picked.begin(), picked.end(), std::size_t{0});
    return picked;
  }
  std::map<std::pair<int, int>, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < n; ++i)
    strata[{static_cast<int>(seqs[i].location_type), static_cast<int>(seqs[i].day_type)}].push_back(i);

  struct Quota {
    std::vector<std::size_t>* members;
    std::size_t take;
    double remainder;
    std::uint64_t key;
  };
  std::vector<Quota> quotas;
  std::size_t assigned = 0;
  for (auto& [key, members] : strata) {
    const double exact = static_cast<double>(max_total) * static_cast<double>(members.size()) /
                         static_cast<double>(n);
    const auto take = static_cast<std::size_t>(std::floor(exact));
    quotas.push_back({&members, take, exact - static_cast<double>(take),
                      static_cast<std::uint64_t>(key.first * 16 + key.second)});
    assigned += take;
  }
  std::vector<std::size_t> by_rem(quotas.size());
  std::iota(by_rem.begin(), by_rem.end(), std::size_t{0});
  std::stable_sort(by_rem.begin(), by_rem.end(),
                   [&](std::size_t a, std::size_t b) { return quotas[a].remainder > quotas[b].remainder; });
  for (std::size_t r = 0; assigned < max_total && r < by_rem.size(); ++r) {
    auto& q = quotas[by_rem[r]];
    if (q.take < q.members->size()) {
      ++q.take;
      ++assigned;
    }
  }
  for (auto& q : quotas) {
    auto members = *q.members;
    Rng rng(mix_seed(seed, q.key));
    for (std::size_t t = 0; t < q.take; ++t) {
      const auto j = static_cast<std::size_t>(rng.integer(static_cast<long long>(t),
                                                          static_cast<long long>(members.size() - 1)));
      std::swap(members[t], members[j]);
      picked.push_back(members[t]);
    }
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

void write_merges(const Dendrogram& dg, std::ostream& out) {
  io::TableWriter w(out, {"step", "cluster_a", "cluster_b", "height", "size"});
  for (std::size_t s = 0; s < dg.merges.size(); ++s) {
    const auto& m = dg.merges[s];
    w.cell(s).cell(m.a).cell(m.b).cell(m.height).cell(m.size);
    w.end_row();
  }
}

void write_heights(const Dendrogram& dg, std::ostream& out) {
  io::TableWriter w(out, {"clusters_after", "height"});
  for (std::size_t s = 0; s < dg.merges.size(); ++s) {
    w.cell(dg.leaf_count - s - 1).cell(dg.merges[s].height);
    w.end_row();
  }
}

void write_cluster_stats(const std::vector<ClusterStats>& stats, std::ostream& out) {
  io::TableWriter w(out, {"location_type", "cluster", "n_sequences", "mean_daily_distance_km",
                          "mean_trip_distance_km", "mean_trip_duration_min", "mean_trips_per_day"});
  auto opt = [&](const std::optional<double>& v) {
    if (v) w.cell(*v);
    else w.cell(std::string_view{});
  };
  for (const auto& s : stats) {
    w.cell(to_string(s.location_type)).cell(s.cluster_id).cell(s.n_sequences);
    opt(s.mean_daily_distance_km);
    opt(s.mean_trip_distance_km);
    opt(s.mean_trip_duration_min);
    opt(s.mean_trips_per_day);
    w.end_row();
  }
}

}  // namespace carshare::cluster

#include "pingloop/tribond.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <stdexcept>
#include <utility>

#include "pingloop/rng.hpp"

namespace pingloop {

namespace {

// A trilaterated placement always fits its own three entries, so apex
// residuals carry no information and candidate lists must never be pruned by
// them; only explicit work budgets bound the search.
constexpr std::size_t kMaxApexCandidates = 256;  // small-ensemble solvers only
constexpr std::size_t kMaxStoredApexes = 100000;
constexpr long long kBridgeChecksPerBase = 2000000;
constexpr std::size_t kMaxQueuedHits = 8192;
constexpr std::size_t kGrownPerBase = 8;
constexpr std::uint64_t kAnchorStream = 3;

double entry_value(const std::vector<PathLength>& entries, std::size_t k) {
  return entries[k].length;
}

std::size_t lower_index(const std::vector<PathLength>& entries, double x) {
  return static_cast<std::size_t>(
      std::lower_bound(entries.begin(), entries.end(), x,
                       [](const PathLength& p, double v) { return p.length < v; }) -
      entries.begin());
}

struct EntryMatch {
  std::size_t entry;
  double residual;
};

// Nearest unused entry to target within tol; ties resolved to the lower index.
std::optional<EntryMatch> match_entry(const std::vector<PathLength>& entries,
                                      const std::vector<char>& used, double target, double tol) {
  std::optional<EntryMatch> best;
  for (std::size_t k = lower_index(entries, target - tol);
       k < entries.size() && entry_value(entries, k) <= target + tol; ++k) {
    if (used[k]) continue;
    const double res = std::fabs(entry_value(entries, k) - target);
    if (res <= tol && (!best || res < best->residual)) best = EntryMatch{k, res};
  }
  return best;
}

struct ApexCandidate {
  Point3 q;
  std::size_t e1, e2, e3;  // ping, loop with anchor a, loop with anchor b
  double residual;         // worst path-length residual of the three
};

double anchor_area(const Point3& pa, const Point3& pb) {
  return 0.5 * norm(cross(pa, pb));
}

// Scans one-ping-two-loop interpretations against anchors (origin, pa, pb),
// trilaterating every admissible entry triple. The callback sees each
// in-tolerance placement; returning true stops the scan. The return value is
// false only when the attempt budget ran out mid-scan.
template <typename OnPlacement>
bool scan_placements(const std::vector<PathLength>& entries, const std::vector<char>& used,
                     const Point3& pa, const Point3& pb, double tol, long long* attempts,
                     long long attempt_budget, OnPlacement&& on_placement) {
  if (anchor_area(pa, pb) < kCollinearAreaThreshold) return true;
  const Point3 origin{};
  const double d_a = norm(pa);
  const double d_b = norm(pb);
  const Point3 ex = (1.0 / d_a) * pa;
  const double s_b = dot(pb, ex);
  const double r_perp = norm(pb - s_b * ex);
  const std::size_t n = entries.size();

  for (std::size_t e1 = 0; e1 < n; ++e1) {
    if (used[e1]) continue;
    const double d_c = entry_value(entries, e1) / 2.0;
    if (d_c < kMinPointSeparation) continue;
    // Loop-with-a values live in [d_c + d_a + |d_c - d_a|, 2(d_c + d_a)].
    const double lo2 = d_c + d_a + std::max(std::fabs(d_c - d_a) - 2.0 * tol, 0.0);
    const double hi2 = 2.0 * (d_c + d_a) + 2.0 * tol;
    for (std::size_t e2 = lower_index(entries, lo2);
         e2 < n && entry_value(entries, e2) <= hi2; ++e2) {
      if (used[e2] || e2 == e1) continue;
      const double d_ca = entry_value(entries, e2) - d_c - d_a;
      if (d_ca <= 0.0) continue;
      // Circle of points at d_c from the origin and d_ca from pa, in the
      // frame along ex: center x_q, radius rho.
      const double x_q = (d_c * d_c - d_ca * d_ca + d_a * d_a) / (2.0 * d_a);
      if (x_q * x_q > (d_c + 2.0 * tol) * (d_c + 2.0 * tol)) continue;
      const double rho2 = d_c * d_c - x_q * x_q;
      const double rho = rho2 > 0.0 ? std::sqrt(rho2) : 0.0;
      // Circle-to-pb distance range bounds the second loop value.
      const double axial = (s_b - x_q) * (s_b - x_q);
      const double dmin = std::sqrt(axial + (r_perp - rho) * (r_perp - rho));
      const double dmax = std::sqrt(axial + (r_perp + rho) * (r_perp + rho));
      const double lo3 = d_c + d_b + dmin - 2.0 * tol;
      const double hi3 = d_c + d_b + dmax + 2.0 * tol;
      for (std::size_t e3 = lower_index(entries, lo3);
           e3 < n && entry_value(entries, e3) <= hi3; ++e3) {
        if (used[e3] || e3 == e1 || e3 == e2) continue;
        const double d_cb = entry_value(entries, e3) - d_c - d_b;
        if (d_cb <= 0.0) continue;
        if (attempts) {
          if (*attempts >= attempt_budget) return false;
          ++*attempts;
        }
        const TrilaterationResult tri = trilaterate(origin, pa, pb, d_c, d_ca, d_cb, tol);
        for (int m = 0; m < tri.count; ++m) {
          const Point3& q = tri.points[m];
          if (norm(q) < kMinPointSeparation || distance(q, pa) < kMinPointSeparation ||
              distance(q, pb) < kMinPointSeparation)
            continue;
          const double rq = norm(q);
          const double r1 = std::fabs(2.0 * rq - entry_value(entries, e1));
          const double r2 = std::fabs(rq + distance(q, pa) + d_a - entry_value(entries, e2));
          const double r3 = std::fabs(rq + distance(q, pb) + d_b - entry_value(entries, e3));
          const double res = std::max({r1, r2, r3});
          if (res <= tol && on_placement(q, e1, e2, e3, res)) return true;
        }
      }
    }
  }
  return true;
}

bool collect_apexes(const std::vector<PathLength>& entries, const std::vector<char>& used,
                    const Point3& pa, const Point3& pb, double tol, long long* attempts,
                    long long attempt_budget, std::vector<ApexCandidate>& out) {
  out.clear();
  const bool in_budget = scan_placements(
      entries, used, pa, pb, tol, attempts, attempt_budget,
      [&](const Point3& q, std::size_t e1, std::size_t e2, std::size_t e3, double res) {
        out.push_back({q, e1, e2, e3, res});
        return false;
      });
  std::stable_sort(out.begin(), out.end(), [](const ApexCandidate& a, const ApexCandidate& b) {
    return a.residual < b.residual;
  });
  if (out.size() > kMaxApexCandidates) out.resize(kMaxApexCandidates);
  return in_budget;
}

double path_length_of(const std::vector<Point3>& pts, PathKind kind, int i, int j) {
  const Point3& pi = pts[static_cast<std::size_t>(i)];
  if (kind == PathKind::ping) return 2.0 * norm(pi);
  const Point3& pj = pts[static_cast<std::size_t>(j)];
  return norm(pi) + distance(pi, pj) + norm(pj);
}

void consume(Reconstruction& r, const DistanceList& beta, std::size_t entry, PathKind kind,
             int i, int j) {
  ConsumedEntry c;
  c.entry = entry;
  c.kind = kind;
  c.i = i;
  c.j = j;
  c.fitted_length = path_length_of(r.points, kind, i, j);
  c.residual = std::fabs(c.fitted_length - beta.entries[entry].length);
  r.consumed.push_back(c);
}

// First point with |z| clearly off-plane decides the sign convention.
void canonicalize_z(std::vector<Point3>& pts) {
  for (const Point3& p : pts) {
    if (std::fabs(p.z) > kMinPointSeparation) {
      if (p.z < 0.0)
        for (Point3& q : pts) q.z = -q.z;
      return;
    }
  }
}

std::vector<char> used_mask(const Reconstruction& r, std::size_t n) {
  std::vector<char> used(n, 0);
  for (const auto& c : r.consumed) used[c.entry] = 1;
  return used;
}

void finalize(Reconstruction& r, std::size_t n) {
  std::vector<char> used(n, 0);
  double worst = 0.0;
  for (const auto& c : r.consumed) {
    used[c.entry] = 1;
    worst = std::max(worst, c.residual);
  }
  r.unplaced.clear();
  for (std::size_t k = 0; k < n; ++k)
    if (!used[k]) r.unplaced.push_back(k);
  r.diagnostics.max_residual = worst;
  if (!r.points.empty())
    r.status = r.unplaced.empty() ? ReconStatus::complete : ReconStatus::partial;
}

Point3 base_point_b(const BaseTriangle& bt) {
  const double x_b = (bt.d_a * bt.d_a + bt.d_b * bt.d_b - bt.d_ab * bt.d_ab) / (2.0 * bt.d_a);
  const double y2 = (bt.d_b - x_b) * (bt.d_b + x_b);
  return {x_b, y2 > 0.0 ? std::sqrt(y2) : 0.0, 0.0};
}

struct CoreHit {
  Point3 pa, pb, qc, qd;
  std::size_t base_entries[3];  // ping a, ping b, loop ab
  std::size_t c_entries[3];     // ping, loop with a, loop with b
  std::size_t d_entries[3];
  std::size_t bridge_entry;
  std::size_t ci, di;  // apex candidate indices behind qc, qd
  double worst;        // dominated by the bridge residual, the one informative check
  int support = 0;     // bridge-confirmed hits sharing either apex
};

// Enumerates bridge-confirmed cores deterministically: base triangles in
// enumerator order, then per base ascending by worst residual. One core
// attempt is charged per base triangle; the apex scans charge the shared
// trilateration budget.
class CoreSearch {
 public:
  CoreSearch(const DistanceList& beta, const ReconParams& params)
      : beta_(&beta), params_(&params), bases_(beta, params.tol), used_(beta.size(), 0) {}

  std::optional<CoreHit> next(ReconDiagnostics& diag) {
    while (true) {
      if (head_ < queue_.size()) return queue_[head_++];
      if (done_) return std::nullopt;
      fill_next_base(diag);
    }
  }

 private:
  void fill_next_base(ReconDiagnostics& diag);

  const DistanceList* beta_;
  const ReconParams* params_;
  BaseTriangleEnumerator bases_;
  std::vector<char> used_;
  std::vector<ApexCandidate> apexes_;
  std::vector<CoreHit> queue_;
  std::size_t head_ = 0;
  bool done_ = false;
};

void CoreSearch::fill_next_base(ReconDiagnostics& diag) {
  queue_.clear();
  head_ = 0;
  if (diag.core_attempts >= params_->max_core_attempts) {
    done_ = true;
    return;
  }
  const auto bt = bases_.next();
  if (!bt) {
    done_ = true;
    return;
  }
  ++diag.core_attempts;
  const Point3 pa{bt->d_a, 0.0, 0.0};
  const Point3 pb = base_point_b(*bt);
  if (anchor_area(pa, pb) < kCollinearAreaThreshold) return;

  const auto& entries = beta_->entries;
  used_[bt->ping_a] = used_[bt->ping_b] = used_[bt->loop_ab] = 1;
  apexes_.clear();
  const bool in_budget = scan_placements(
      entries, used_, pa, pb, params_->tol, &diag.vertex_attempts, params_->max_vertex_attempts,
      [this](const Point3& q, std::size_t e1, std::size_t e2, std::size_t e3, double residual) {
        apexes_.push_back({q, e1, e2, e3, residual});
        return apexes_.size() >= kMaxStoredApexes;
      });

  // The candidate list stays in scan order (ascending ping entry), which
  // front-loads true apexes because small entries are disproportionately
  // pings. Pairing is quadratic in the candidate count, so it carries its own
  // budget; only the bridge can tell a true pair from the many spurious
  // placements, and at loose tolerances spurious bridges are common, so every
  // hit within the budget is banked for growth retries rather than stopping
  // at the first few.
  long long checks = 0;
  for (std::size_t ci = 0; ci < apexes_.size(); ++ci) {
    const ApexCandidate& c = apexes_[ci];
    if (checks >= kBridgeChecksPerBase || queue_.size() >= kMaxQueuedHits) break;
    if (c.q.z < 0.0) continue;  // first apex fixes the z >= 0 side
    used_[c.e1] = used_[c.e2] = used_[c.e3] = 1;
    for (std::size_t di = 0; di < apexes_.size(); ++di) {
      const ApexCandidate& d = apexes_[di];
      if (checks >= kBridgeChecksPerBase || queue_.size() >= kMaxQueuedHits) break;
      ++checks;
      if (used_[d.e1] || used_[d.e2] || used_[d.e3]) continue;
      if (distance(c.q, d.q) < kMinPointSeparation) continue;
      used_[d.e1] = used_[d.e2] = used_[d.e3] = 1;
      const double bridge_target = norm(c.q) + distance(c.q, d.q) + norm(d.q);
      const auto bridge = match_entry(entries, used_, bridge_target, params_->tol);
      used_[d.e1] = used_[d.e2] = used_[d.e3] = 0;
      if (!bridge) continue;
      CoreHit hit;
      hit.pa = pa;
      hit.pb = pb;
      hit.qc = c.q;
      hit.qd = d.q;
      hit.base_entries[0] = bt->ping_a;
      hit.base_entries[1] = bt->ping_b;
      hit.base_entries[2] = bt->loop_ab;
      hit.c_entries[0] = c.e1;
      hit.c_entries[1] = c.e2;
      hit.c_entries[2] = c.e3;
      hit.d_entries[0] = d.e1;
      hit.d_entries[1] = d.e2;
      hit.d_entries[2] = d.e3;
      hit.bridge_entry = bridge->entry;
      hit.ci = ci;
      hit.di = di;
      hit.worst = std::max({c.residual, d.residual, bridge->residual});
      queue_.push_back(hit);
    }
    used_[c.e1] = used_[c.e2] = used_[c.e3] = 0;
  }
  used_[bt->ping_a] = used_[bt->ping_b] = used_[bt->loop_ab] = 0;

  // Residuals below the tolerance carry no rank information, so hits are
  // ordered by mutual support instead: every pair drawn from the true apex
  // set confirms a bridge, so a true apex recurs across hits while a spurious
  // one almost never does. Ranking by the weaker apex of each pair floats
  // whole true cliques over one-off coincidences.
  std::vector<int> occurrences(apexes_.size(), 0);
  for (const CoreHit& hit : queue_) {
    ++occurrences[hit.ci];
    ++occurrences[hit.di];
  }
  for (CoreHit& hit : queue_)
    hit.support = std::min(occurrences[hit.ci], occurrences[hit.di]);
  std::stable_sort(queue_.begin(), queue_.end(), [](const CoreHit& a, const CoreHit& b) {
    if (a.support != b.support) return a.support > b.support;
    return a.worst < b.worst;
  });

  // Star-shaped coincidence clusters can push spurious support past any fixed
  // floor, but they almost never close into triangles: a hit is confirmed
  // when its two apexes share a third bridged neighbor, which five or more
  // true points always provide. A base with confirmed hits grows only those;
  // four-point scenes and dropout-degraded ensembles have no triangles, so an
  // unconfirmed queue falls back to the support ranking.
  if (!queue_.empty()) {
    std::vector<std::pair<std::size_t, std::size_t>> adj;  // (candidate, neighbor)
    adj.reserve(2 * queue_.size());
    for (const CoreHit& hit : queue_) {
      adj.emplace_back(hit.ci, hit.di);
      adj.emplace_back(hit.di, hit.ci);
    }
    std::sort(adj.begin(), adj.end());
    adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
    const auto neighbors = [&](std::size_t v) {
      const auto lo = std::lower_bound(adj.begin(), adj.end(),
                                       std::make_pair(v, std::size_t{0}));
      auto hi = lo;
      while (hi != adj.end() && hi->first == v) ++hi;
      return std::make_pair(lo, hi);
    };
    const auto confirmed = [&](const CoreHit& hit) {
      const auto [clo, chi] = neighbors(hit.ci);
      const auto [dlo, dhi] = neighbors(hit.di);
      for (auto it = clo; it != chi; ++it) {
        if (it->second == hit.di) continue;
        for (auto jt = dlo; jt != dhi; ++jt)
          if (jt->second == it->second) return true;
      }
      return false;
    };
    if (std::any_of(queue_.begin(), queue_.end(), confirmed)) {
      const auto lone = [&](const CoreHit& h) { return !confirmed(h); };
      queue_.erase(std::remove_if(queue_.begin(), queue_.end(), lone), queue_.end());
    }
  }
  // One clique surfaces as several hits (swapped or mirrored apex pairs), so
  // the grown prefix keeps only distinct consumed-entry sets. Growth retries
  // are far costlier than banking, and a fresh base is a better use of the
  // budget than this queue's tail.
  std::vector<std::array<std::size_t, 7>> kept_sets;
  std::size_t kept = 0;
  for (const CoreHit& hit : queue_) {
    if (kept >= kGrownPerBase) break;
    std::array<std::size_t, 7> key{hit.c_entries[0], hit.c_entries[1], hit.c_entries[2],
                                   hit.d_entries[0], hit.d_entries[1], hit.d_entries[2],
                                   hit.bridge_entry};
    std::sort(key.begin(), key.end());
    if (std::find(kept_sets.begin(), kept_sets.end(), key) != kept_sets.end()) continue;
    kept_sets.push_back(key);
    queue_[kept++] = hit;
  }
  queue_.resize(kept);
  if (!in_budget) done_ = true;  // the pending queue is still served
}

Reconstruction make_core(const DistanceList& beta, const CoreHit& h) {
  Reconstruction r;
  r.points = {h.pa, h.pb, h.qc, h.qd};
  canonicalize_z(r.points);
  consume(r, beta, h.base_entries[0], PathKind::ping, 0, -1);
  consume(r, beta, h.base_entries[1], PathKind::ping, 1, -1);
  consume(r, beta, h.base_entries[2], PathKind::loop, 0, 1);
  consume(r, beta, h.c_entries[0], PathKind::ping, 2, -1);
  consume(r, beta, h.c_entries[1], PathKind::loop, 0, 2);
  consume(r, beta, h.c_entries[2], PathKind::loop, 1, 2);
  consume(r, beta, h.d_entries[0], PathKind::ping, 3, -1);
  consume(r, beta, h.d_entries[1], PathKind::loop, 0, 3);
  consume(r, beta, h.d_entries[2], PathKind::loop, 1, 3);
  consume(r, beta, h.bridge_entry, PathKind::loop, 2, 3);
  return r;
}

}  // namespace

void ReconParams::validate() const {
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
  if (max_core_attempts < 1 || max_vertex_attempts < 1)
    throw std::invalid_argument("attempt budgets must be at least 1");
}

BaseTriangleEnumerator::BaseTriangleEnumerator(const DistanceList& beta, double tol)
    : entries_(&beta.entries), tol_(tol), u_(static_cast<std::size_t>(-1)), v_(1) {}

bool BaseTriangleEnumerator::advance_pair() {
  const auto& e = *entries_;
  const std::size_t n = e.size();
  while (true) {
    if (u_ == static_cast<std::size_t>(-1)) {
      u_ = 0;
    } else {
      ++u_;
      if (u_ >= v_) {
        ++v_;
        u_ = 0;
      }
    }
    if (v_ >= n) return false;
    const double a = e[u_].length;
    const double b = e[v_].length;
    const double lo = std::max(a, b) + tol_;
    const double hi = a + b - tol_;
    if (hi <= lo) continue;
    w_ = static_cast<std::size_t>(
        std::upper_bound(e.begin(), e.end(), lo,
                         [](double v, const PathLength& p) { return v < p.length; }) -
        e.begin());
    w_end_ = lower_index(e, hi);
    if (w_ < w_end_) {
      pair_ready_ = true;
      return true;
    }
  }
}

std::optional<BaseTriangle> BaseTriangleEnumerator::next() {
  const auto& e = *entries_;
  while (true) {
    if (!pair_ready_ && !advance_pair()) return std::nullopt;
    while (w_ < w_end_) {
      const std::size_t k = w_++;
      if (k == u_ || k == v_) continue;
      const double d_a = e[u_].length / 2.0;
      const double d_b = e[v_].length / 2.0;
      const double d_ab = e[k].length - d_a - d_b;
      if (d_ab <= std::fabs(d_a - d_b) + tol_) continue;
      if (d_ab >= d_a + d_b - tol_) continue;
      return BaseTriangle{d_a, d_b, d_ab, u_, v_, k};
    }
    pair_ready_ = false;
  }
}

Reconstruction find_core(const DistanceList& beta, const ReconParams& params) {
  params.validate();
  beta.validate();
  Reconstruction r;
  const std::size_t n = beta.size();
  if (n >= 10) {
    CoreSearch search(beta, params);
    ReconDiagnostics diag;
    if (const auto hit = search.next(diag)) r = make_core(beta, *hit);
    r.diagnostics.core_attempts = diag.core_attempts;
    r.diagnostics.vertex_attempts = diag.vertex_attempts;
  }
  finalize(r, n);
  return r;
}

Reconstruction add_vertex(Reconstruction r, const DistanceList& beta, const ReconParams& params) {
  params.validate();
  beta.validate();
  if (r.points.size() < 3)
    throw std::invalid_argument("add_vertex needs at least 3 placed points");
  const std::size_t n = beta.size();
  const auto& entries = beta.entries;
  std::vector<char> used = used_mask(r, n);
  long long attempts = r.diagnostics.vertex_attempts;
  bool exhausted = false;
  std::uint64_t round = 0;

  struct Pending {
    Point3 q;
    int ai = 0, bi = 0;
    std::size_t e1 = 0, e2 = 0, e3 = 0;
    std::size_t support = 0;
    double residual_sum = 0.0;
    bool valid = false;
  };

  while (!exhausted) {
    if (std::none_of(used.begin(), used.end(), [](char u) { return !u; })) break;
    const int placed = static_cast<int>(r.points.size());
    const std::size_t targets = static_cast<std::size_t>(placed - 2);
    // At least half of the bridge loops through the other placed points must
    // be present: tolerant of dropouts, hostile to clutter coincidences.
    const std::size_t required = (targets + 1) / 2;
    std::vector<std::pair<int, int>> anchor_pairs;
    for (int b = 1; b < placed; ++b)
      for (int a = 0; a < b; ++a) anchor_pairs.emplace_back(a, b);
    std::mt19937_64 rng(derive_seed(params.seed, kAnchorStream + round));
    std::shuffle(anchor_pairs.begin(), anchor_pairs.end(), rng);
    ++round;

    Pending best;
    bool perfect = false;
    for (const auto& [ai, bi] : anchor_pairs) {
      const Point3& pa = r.points[static_cast<std::size_t>(ai)];
      const Point3& pb = r.points[static_cast<std::size_t>(bi)];
      const bool in_budget = scan_placements(
          entries, used, pa, pb, params.tol, &attempts, params.max_vertex_attempts,
          [&](const Point3& q, std::size_t e1, std::size_t e2, std::size_t e3, double) {
            const auto too_close = [&](const Point3& p) {
              return distance(p, q) < kMinPointSeparation;
            };
            if (std::any_of(r.points.begin(), r.points.end(), too_close)) return false;
            used[e1] = used[e2] = used[e3] = 1;
            std::size_t support = 0;
            double residual_sum = 0.0;
            for (int t = 0; t < placed; ++t) {
              if (t == ai || t == bi) continue;
              const Point3& pt = r.points[static_cast<std::size_t>(t)];
              const double target = norm(q) + distance(q, pt) + norm(pt);
              if (const auto m = match_entry(entries, used, target, params.tol)) {
                ++support;
                residual_sum += m->residual;
              }
            }
            used[e1] = used[e2] = used[e3] = 0;
            if (support < required) return false;
            if (!best.valid || support > best.support ||
                (support == best.support && residual_sum < best.residual_sum))
              best = Pending{q, ai, bi, e1, e2, e3, support, residual_sum, true};
            if (support == targets) {
              perfect = true;
              return true;
            }
            return false;
          });
      if (!in_budget) {
        exhausted = true;
        break;
      }
      if (perfect) break;
    }
    if (exhausted || !best.valid) break;

    const int m_idx = placed;
    r.points.push_back(best.q);
    used[best.e1] = used[best.e2] = used[best.e3] = 1;
    consume(r, beta, best.e1, PathKind::ping, m_idx, -1);
    consume(r, beta, best.e2, PathKind::loop, best.ai, m_idx);
    consume(r, beta, best.e3, PathKind::loop, best.bi, m_idx);
    // Consume every bridge loop the new vertex explains so its entries never
    // linger as unplaced.
    for (int t = 0; t < placed; ++t) {
      if (t == best.ai || t == best.bi) continue;
      const Point3& pt = r.points[static_cast<std::size_t>(t)];
      const double target = norm(best.q) + distance(best.q, pt) + norm(pt);
      if (const auto m = match_entry(entries, used, target, params.tol)) {
        used[m->entry] = 1;
        consume(r, beta, m->entry, PathKind::loop, t, m_idx);
      }
    }
    canonicalize_z(r.points);
  }
  r.diagnostics.vertex_attempts = attempts;
  finalize(r, n);
  return r;
}

namespace {

// Two placed points from the first viable (ping, ping, loop) triple; no
// redundant entry exists at this size, so the first interpretation wins.
Reconstruction solve_two_point(const DistanceList& beta, const ReconParams& params) {
  Reconstruction r;
  BaseTriangleEnumerator bases(beta, params.tol);
  long long attempts = 0;
  if (const auto bt = bases.next()) {
    attempts = 1;
    r.points = {Point3{bt->d_a, 0.0, 0.0}, base_point_b(*bt)};
    consume(r, beta, bt->ping_a, PathKind::ping, 0, -1);
    consume(r, beta, bt->ping_b, PathKind::ping, 1, -1);
    consume(r, beta, bt->loop_ab, PathKind::loop, 0, 1);
  }
  r.diagnostics.core_attempts = attempts;
  finalize(r, beta.size());
  return r;
}

// Base triangle plus a single apex. A fourth path for a bridge does not
// exist at this size, so the apex is accepted unverified on the z >= 0 side
// (its mirror is congruent).
Reconstruction solve_three_point(const DistanceList& beta, const ReconParams& params) {
  Reconstruction r;
  const std::size_t n = beta.size();
  const auto& entries = beta.entries;
  std::vector<char> used(n, 0);
  std::vector<ApexCandidate> apexes;
  BaseTriangleEnumerator bases(beta, params.tol);
  long long attempts = 0;
  while (attempts < params.max_core_attempts) {
    const auto bt = bases.next();
    if (!bt) break;
    ++attempts;
    const Point3 pa{bt->d_a, 0.0, 0.0};
    const Point3 pb = base_point_b(*bt);
    if (anchor_area(pa, pb) < kCollinearAreaThreshold) continue;
    used[bt->ping_a] = used[bt->ping_b] = used[bt->loop_ab] = 1;
    collect_apexes(entries, used, pa, pb, params.tol, nullptr, 0, apexes);
    for (const ApexCandidate& c : apexes) {
      if (c.q.z < 0.0) continue;
      r.points = {pa, pb, c.q};
      consume(r, beta, bt->ping_a, PathKind::ping, 0, -1);
      consume(r, beta, bt->ping_b, PathKind::ping, 1, -1);
      consume(r, beta, bt->loop_ab, PathKind::loop, 0, 1);
      consume(r, beta, c.e1, PathKind::ping, 2, -1);
      consume(r, beta, c.e2, PathKind::loop, 0, 2);
      consume(r, beta, c.e3, PathKind::loop, 1, 2);
      r.diagnostics.core_attempts = attempts;
      finalize(r, n);
      return r;
    }
    used[bt->ping_a] = used[bt->ping_b] = used[bt->loop_ab] = 0;
  }
  r.diagnostics.core_attempts = attempts;
  finalize(r, n);
  return r;
}

}  // namespace

Reconstruction reconstruct(const DistanceList& beta, const ReconParams& params) {
  params.validate();
  beta.validate();
  const std::size_t n = beta.size();
  if (n < 3) throw std::invalid_argument("distance list needs at least 3 entries");
  if (n < 6) return solve_two_point(beta, params);
  if (n < 10) {
    Reconstruction r = solve_three_point(beta, params);
    if (r.status == ReconStatus::core_not_found) return solve_two_point(beta, params);
    return add_vertex(std::move(r), beta, params);
  }

  // A core is confirmed by a single bridge entry, so at loose tolerances
  // clutter can fake one; growth cannot be faked for long. Every candidate
  // core is grown and the first that explains the whole ensemble wins,
  // otherwise the best partial answer does.
  CoreSearch search(beta, params);
  ReconDiagnostics diag;
  Reconstruction best;
  while (const auto hit = search.next(diag)) {
    Reconstruction core = make_core(beta, *hit);
    core.diagnostics.core_attempts = diag.core_attempts;
    core.diagnostics.vertex_attempts = diag.vertex_attempts;
    Reconstruction grown = add_vertex(std::move(core), beta, params);
    diag.vertex_attempts = grown.diagnostics.vertex_attempts;
    if (grown.status == ReconStatus::complete) {
      grown.diagnostics.core_attempts = diag.core_attempts;
      return grown;
    }
    if (best.status == ReconStatus::core_not_found ||
        grown.consumed.size() > best.consumed.size() ||
        (grown.consumed.size() == best.consumed.size() &&
         grown.diagnostics.max_residual < best.diagnostics.max_residual))
      best = std::move(grown);
    if (diag.vertex_attempts >= params.max_vertex_attempts) break;
  }
  best.diagnostics.core_attempts = diag.core_attempts;
  best.diagnostics.vertex_attempts = diag.vertex_attempts;
  if (best.status == ReconStatus::core_not_found) finalize(best, n);
  return best;
}

bool verify_soundness(const Reconstruction& r, const DistanceList& beta, double tol) {
  std::vector<char> seen(beta.size(), 0);
  for (const auto& c : r.consumed) {
    if (c.entry >= beta.size() || seen[c.entry]) return false;
    seen[c.entry] = 1;
    if (c.i < 0 || c.i >= static_cast<int>(r.points.size())) return false;
    if (c.kind == PathKind::loop &&
        (c.j < 0 || c.j >= static_cast<int>(r.points.size()) || c.j == c.i))
      return false;
    if (c.kind == PathKind::unknown) return false;
    const double fitted = path_length_of(r.points, c.kind, c.i, c.j);
    if (std::fabs(fitted - beta.entries[c.entry].length) > tol) return false;
  }
  return true;
}

}  // namespace pingloop

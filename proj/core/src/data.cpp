#include "sloewner/data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sloewner/errors.hpp"

namespace sloewner {

namespace {

constexpr double kConjTol = 1e-12;
constexpr double kCompatTol = 1e-10;

std::string point_str(Complex s) {
  return "(" + std::to_string(s.real()) + ", " + std::to_string(s.imag()) +
         "i)";
}

bool conj_close(Complex a, Complex b) {
  return std::abs(b - std::conj(a)) <= kConjTol * (1.0 + std::abs(a));
}

bool conj_close(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) return false;
  return (b - a.conjugate()).norm() <= kConjTol * (1.0 + a.norm());
}

bool is_real_value(Complex a) {
  return std::abs(a.imag()) <= kConjTol * (1.0 + std::abs(a));
}

bool is_real_vector(const Vector& a) {
  return a.imag().norm() <= kConjTol * (1.0 + a.norm());
}

Complex bilinear(const Vector& a, const Vector& b) {
  return (a.transpose() * b)(0);
}

// Conjugate pairing of one data side. `order` maps new index -> old index.
struct SortPlan {
  bool closed = true;
  Index pairs = 0;
  std::vector<Index> order;
};

template <class Sample, class PointFn, class RealFn, class ConjFn>
SortPlan plan_closure_sort(const std::vector<Sample>& samples, PointFn point,
                           RealFn is_real, ConjFn is_conj) {
  const Index n = Index(samples.size());
  SortPlan plan;
  std::vector<bool> used(n, false);
  std::vector<std::pair<Index, Index>> pairs;  // canonical (Im > 0) first
  std::vector<Index> reals;

  for (Index i = 0; i < n; ++i) {
    if (used[i]) continue;
    if (is_real(samples[i])) {
      reals.push_back(i);
      used[i] = true;
      continue;
    }
    Index match = -1;
    for (Index j = 0; j < n; ++j) {
      if (j == i || used[j]) continue;
      if (is_conj(samples[i], samples[j])) {
        match = j;
        break;
      }
    }
    if (match < 0) {
      plan.closed = false;
      return plan;
    }
    used[i] = used[match] = true;
    if (point(samples[i]).imag() > 0)
      pairs.emplace_back(i, match);
    else
      pairs.emplace_back(match, i);
  }

  auto key = [&](Index i) {
    Complex s = point(samples[i]);
    return std::make_tuple(std::abs(s.imag()), s.real(), s.imag());
  };
  std::sort(pairs.begin(), pairs.end(),
            [&](auto a, auto b) { return key(a.first) < key(b.first); });
  std::sort(reals.begin(), reals.end(),
            [&](Index a, Index b) { return key(a) < key(b); });

  for (auto [a, b] : pairs) {
    plan.order.push_back(a);
    plan.order.push_back(b);
  }
  for (Index r : reals) plan.order.push_back(r);
  plan.pairs = Index(pairs.size());
  return plan;
}

SortPlan plan_left(const std::vector<LeftSample>& s,
                   const std::vector<Vector>* fp) {
  return plan_closure_sort(
      s, [](const LeftSample& a) { return a.mu; },
      [&](const LeftSample& a) {
        Index i = &a - s.data();
        bool r = is_real_value(a.mu) && is_real_vector(a.ell) &&
                 is_real_vector(a.f);
        if (fp && r) r = is_real_vector((*fp)[i]);
        return r;
      },
      [&](const LeftSample& a, const LeftSample& b) {
        Index i = &a - s.data(), j = &b - s.data();
        bool c = conj_close(a.mu, b.mu) && conj_close(a.ell, b.ell) &&
                 conj_close(a.f, b.f);
        if (fp && c) c = conj_close((*fp)[i], (*fp)[j]);
        return c;
      });
}

SortPlan plan_right(const std::vector<RightSample>& s,
                    const std::vector<Vector>* gp) {
  return plan_closure_sort(
      s, [](const RightSample& a) { return a.sigma; },
      [&](const RightSample& a) {
        Index i = &a - s.data();
        bool r = is_real_value(a.sigma) && is_real_vector(a.r) &&
                 is_real_vector(a.g);
        if (gp && r) r = is_real_vector((*gp)[i]);
        return r;
      },
      [&](const RightSample& a, const RightSample& b) {
        Index i = &a - s.data(), j = &b - s.data();
        bool c = conj_close(a.sigma, b.sigma) && conj_close(a.r, b.r) &&
                 conj_close(a.g, b.g);
        if (gp && c) c = conj_close((*gp)[i], (*gp)[j]);
        return c;
      });
}

}  // namespace

std::optional<Complex> InterpolationData::theta_at(Index i) const {
  for (const auto& e : bitangential)
    if (e.index == i) return e.theta;
  return std::nullopt;
}

Vector InterpolationData::mu_values() const {
  Vector v(n_left());
  for (Index i = 0; i < n_left(); ++i) v(i) = left[i].mu;
  return v;
}

Vector InterpolationData::sigma_values() const {
  Vector v(n_right());
  for (Index i = 0; i < n_right(); ++i) v(i) = right[i].sigma;
  return v;
}

Matrix InterpolationData::L() const {
  Matrix M(p, n_left());
  for (Index i = 0; i < n_left(); ++i) M.col(i) = left[i].ell;
  return M;
}

Matrix InterpolationData::R() const {
  Matrix M(m, n_right());
  for (Index i = 0; i < n_right(); ++i) M.col(i) = right[i].r;
  return M;
}

Matrix InterpolationData::F() const {
  Matrix M(m, n_left());
  for (Index i = 0; i < n_left(); ++i) M.col(i) = left[i].f;
  return M;
}

Matrix InterpolationData::G() const {
  Matrix M(p, n_right());
  for (Index i = 0; i < n_right(); ++i) M.col(i) = right[i].g;
  return M;
}

Matrix InterpolationData::Fp() const {
  Matrix M(m, Index(f_prime.size()));
  for (Index i = 0; i < Index(f_prime.size()); ++i) M.col(i) = f_prime[i];
  return M;
}

Matrix InterpolationData::Gp() const {
  Matrix M(p, Index(g_prime.size()));
  for (Index i = 0; i < Index(g_prime.size()); ++i) M.col(i) = g_prime[i];
  return M;
}

void InterpolationData::validate() const {
  for (const auto& s : left)
    if (s.ell.size() != p || s.f.size() != m)
      throw DataError("left sample has wrong vector dimensions");
  for (const auto& s : right)
    if (s.r.size() != m || s.g.size() != p)
      throw DataError("right sample has wrong vector dimensions");
  if (!f_prime.empty() && Index(f_prime.size()) != n_left())
    throw DataError("f' entries must align with left samples");
  if (!g_prime.empty() && Index(g_prime.size()) != n_right())
    throw DataError("g' entries must align with right samples");

  for (Index i = 0; i < n_left(); ++i)
    for (Index j = i + 1; j < n_left(); ++j)
      if (left[i].mu == left[j].mu)
        throw DuplicatePointError("duplicate left point " +
                                  point_str(left[i].mu));
  for (Index i = 0; i < n_right(); ++i)
    for (Index j = i + 1; j < n_right(); ++j)
      if (right[i].sigma == right[j].sigma)
        throw DuplicatePointError("duplicate right point " +
                                  point_str(right[i].sigma));

  for (const auto& e : bitangential) {
    if (e.index < 0 || e.index >= n_left() || e.index >= n_right())
      throw DataError("bitangential index out of range");
    if (left[e.index].mu != right[e.index].sigma)
      throw DataError("bitangential entry at non-coinciding index " +
                      std::to_string(e.index));
    Complex fr = bilinear(left[e.index].f, right[e.index].r);
    Complex lg = bilinear(left[e.index].ell, right[e.index].g);
    if (std::abs(fr - lg) > kCompatTol * (1.0 + std::abs(lg)))
      throw DataError("incompatible data at coinciding point " +
                      point_str(left[e.index].mu));
  }
}

InterpolationData tangential_sample(const TransferOracle& oracle,
                                    const SampleRequest& request) {
  const Index p = oracle.num_outputs(), m = oracle.num_inputs();
  InterpolationData data;
  data.m = int(m);
  data.p = int(p);

  auto direction = [](const std::vector<Vector>& given, Index i, Index dim) {
    if (!given.empty()) return given[i];
    Vector e = Vector::Zero(dim);
    e(i % dim) = 1.0;
    return e;
  };

  const auto& lp = request.left_points;
  const auto& rp = request.right_points;
  if (!request.left_directions.empty() &&
      request.left_directions.size() != lp.size())
    throw DataError("one left direction per left point required");
  if (!request.right_directions.empty() &&
      request.right_directions.size() != rp.size())
    throw DataError("one right direction per right point required");

  for (std::size_t i = 0; i < lp.size(); ++i)
    for (std::size_t j = i + 1; j < lp.size(); ++j)
      if (lp[i] == lp[j])
        throw DuplicatePointError("duplicate left point " + point_str(lp[i]));
  for (std::size_t i = 0; i < rp.size(); ++i)
    for (std::size_t j = i + 1; j < rp.size(); ++j)
      if (rp[i] == rp[j])
        throw DuplicatePointError("duplicate right point " + point_str(rp[i]));
  // Coinciding left/right points are only representable at equal indices.
  for (std::size_t i = 0; i < lp.size(); ++i)
    for (std::size_t j = 0; j < rp.size(); ++j)
      if (lp[i] == rp[j] && i != j)
        throw DuplicatePointError(
            "coinciding left/right point " + point_str(lp[i]) +
            " must be placed at the same index on both sides");

  for (std::size_t i = 0; i < lp.size(); ++i) {
    LeftSample s;
    s.mu = lp[i];
    s.ell = direction(request.left_directions, Index(i), p);
    s.f = oracle.eval(s.mu).transpose() * s.ell;
    data.left.push_back(std::move(s));
    if (request.want_hermite)
      data.f_prime.push_back(oracle.derivative(lp[i]).transpose() *
                             data.left.back().ell);
  }
  for (std::size_t i = 0; i < rp.size(); ++i) {
    RightSample s;
    s.sigma = rp[i];
    s.r = direction(request.right_directions, Index(i), m);
    s.g = oracle.eval(s.sigma) * s.r;
    data.right.push_back(std::move(s));
    if (request.want_hermite)
      data.g_prime.push_back(oracle.derivative(rp[i]) * data.right.back().r);
  }

  if (request.want_bitangential) {
    Index shared = std::min(data.n_left(), data.n_right());
    for (Index i = 0; i < shared; ++i) {
      if (data.left[i].mu != data.right[i].sigma) continue;
      Complex theta = (data.left[i].ell.transpose() *
                       oracle.derivative(data.left[i].mu) * data.right[i].r)(0);
      data.bitangential.push_back({i, theta});
    }
  }

  data.validate();
  return data;
}

CompatibilityReport check_compatibility(const InterpolationData& data) {
  CompatibilityReport report;
  for (Index i = 0; i < data.n_left(); ++i)
    for (Index j = i + 1; j < data.n_left(); ++j)
      if (data.left[i].mu == data.left[j].mu)
        report.findings.push_back({"duplicate-point", i,
                                   "left point " + point_str(data.left[i].mu) +
                                       " repeated at index " +
                                       std::to_string(j)});
  for (Index i = 0; i < data.n_right(); ++i)
    for (Index j = i + 1; j < data.n_right(); ++j)
      if (data.right[i].sigma == data.right[j].sigma)
        report.findings.push_back(
            {"duplicate-point", i,
             "right point " + point_str(data.right[i].sigma) +
                 " repeated at index " + std::to_string(j)});

  Index shared = std::min(data.n_left(), data.n_right());
  for (Index i = 0; i < shared; ++i) {
    if (data.left[i].mu != data.right[i].sigma) continue;
    Complex fr = bilinear(data.left[i].f, data.right[i].r);
    Complex lg = bilinear(data.left[i].ell, data.right[i].g);
    if (std::abs(fr - lg) > kCompatTol * (1.0 + std::abs(lg)))
      report.findings.push_back(
          {"compatibility", i,
           "f^T r = " + point_str(fr) + " but ell^T g = " + point_str(lg) +
               " at coinciding point " + point_str(data.left[i].mu)});
  }
  return report;
}

ClosureResult conjugate_closure_sort(const InterpolationData& data) {
  ClosureResult result;
  result.data = data;

  const auto* fp = data.has_left_derivatives() ? &data.f_prime : nullptr;
  const auto* gp = data.has_right_derivatives() ? &data.g_prime : nullptr;
  SortPlan lplan = plan_left(data.left, fp);
  SortPlan rplan = plan_right(data.right, gp);
  if (!lplan.closed || !rplan.closed) {
    result.closed = false;
    return result;
  }

  InterpolationData sorted;
  sorted.m = data.m;
  sorted.p = data.p;
  for (Index i = 0; i < data.n_left(); ++i) {
    sorted.left.push_back(data.left[lplan.order[i]]);
    if (fp) sorted.f_prime.push_back(data.f_prime[lplan.order[i]]);
  }
  for (Index i = 0; i < data.n_right(); ++i) {
    sorted.right.push_back(data.right[rplan.order[i]]);
    if (gp) sorted.g_prime.push_back(data.g_prime[rplan.order[i]]);
  }

  // Re-anchor bitangential entries; coinciding points must land on a shared
  // index after the per-side sorts, otherwise the data does not qualify.
  for (const auto& e : data.bitangential) {
    Index new_left = -1;
    for (Index i = 0; i < data.n_left(); ++i)
      if (lplan.order[i] == e.index) new_left = i;
    if (new_left < 0 || new_left >= sorted.n_right() ||
        sorted.right[new_left].sigma != sorted.left[new_left].mu) {
      result.closed = false;
      return result;
    }
    sorted.bitangential.push_back({new_left, e.theta});
  }

  // Bitangential data itself must be closed: paired points carry conjugate
  // theta values.
  for (const auto& e : sorted.bitangential) {
    Complex mu = sorted.left[e.index].mu;
    if (is_real_value(mu)) {
      if (!is_real_value(e.theta)) {
        result.closed = false;
        return result;
      }
      continue;
    }
    Index partner = (e.index % 2 == 0) ? e.index + 1 : e.index - 1;
    auto other = sorted.theta_at(partner);
    if (!other || !conj_close(e.theta, *other)) {
      result.closed = false;
      return result;
    }
  }

  result.data = std::move(sorted);
  result.closed = true;
  result.left_pairs = lplan.pairs;
  result.right_pairs = rplan.pairs;
  return result;
}

Matrix pair_block_transform(Index n, Index pairs) {
  Matrix T = Matrix::Identity(n, n);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (Index b = 0; b < pairs; ++b) {
    Index i = 2 * b;
    T(i, i) = inv_sqrt2;
    T(i, i + 1) = Complex(0, -inv_sqrt2);
    T(i + 1, i) = inv_sqrt2;
    T(i + 1, i + 1) = Complex(0, inv_sqrt2);
  }
  return T;
}

namespace {

// Counts the leading conjugate-pair run and checks the sorted layout.
template <class Sample, class PointFn, class RealFn, class ConjFn>
Index verify_sorted_pattern(const std::vector<Sample>& s, PointFn point,
                            RealFn is_real, ConjFn is_conj) {
  const Index n = Index(s.size());
  Index i = 0, pairs = 0;
  while (i + 1 < n && !is_real(s[i])) {
    if (!is_conj(s[i], s[i + 1]))
      throw NotClosedError(
          "data is not conjugate-closure sorted (pair expected at index " +
          std::to_string(i) + ")");
    ++pairs;
    i += 2;
  }
  for (; i < n; ++i)
    if (!is_real(s[i]))
      throw NotClosedError(
          "data is not conjugate-closure sorted (real tail expected at "
          "index " +
          std::to_string(i) + ")");
  return pairs;
}

}  // namespace

Index sorted_pair_count(const std::vector<LeftSample>& samples) {
  return verify_sorted_pattern(
      samples, [](const LeftSample& a) { return a.mu; },
      [](const LeftSample& a) {
        return is_real_value(a.mu) && is_real_vector(a.ell) &&
               is_real_vector(a.f);
      },
      [](const LeftSample& a, const LeftSample& b) {
        return conj_close(a.mu, b.mu) && conj_close(a.ell, b.ell) &&
               conj_close(a.f, b.f);
      });
}

Index sorted_pair_count(const std::vector<RightSample>& samples) {
  return verify_sorted_pattern(
      samples, [](const RightSample& a) { return a.sigma; },
      [](const RightSample& a) {
        return is_real_value(a.sigma) && is_real_vector(a.r) &&
               is_real_vector(a.g);
      },
      [](const RightSample& a, const RightSample& b) {
        return conj_close(a.sigma, b.sigma) && conj_close(a.r, b.r) &&
               conj_close(a.g, b.g);
      });
}

RealTransform real_transform(const InterpolationData& sorted_data) {
  const auto* fp =
      sorted_data.has_left_derivatives() ? &sorted_data.f_prime : nullptr;
  const auto* gp =
      sorted_data.has_right_derivatives() ? &sorted_data.g_prime : nullptr;

  Index lp = verify_sorted_pattern(
      sorted_data.left, [](const LeftSample& a) { return a.mu; },
      [&](const LeftSample& a) {
        Index i = &a - sorted_data.left.data();
        bool r = is_real_value(a.mu) && is_real_vector(a.ell) &&
                 is_real_vector(a.f);
        if (fp && r) r = is_real_vector((*fp)[i]);
        return r;
      },
      [&](const LeftSample& a, const LeftSample& b) {
        Index i = &a - sorted_data.left.data();
        Index j = &b - sorted_data.left.data();
        bool c = conj_close(a.mu, b.mu) && conj_close(a.ell, b.ell) &&
                 conj_close(a.f, b.f);
        if (fp && c) c = conj_close((*fp)[i], (*fp)[j]);
        return c;
      });
  Index rp = verify_sorted_pattern(
      sorted_data.right, [](const RightSample& a) { return a.sigma; },
      [&](const RightSample& a) {
        Index i = &a - sorted_data.right.data();
        bool r = is_real_value(a.sigma) && is_real_vector(a.r) &&
                 is_real_vector(a.g);
        if (gp && r) r = is_real_vector((*gp)[i]);
        return r;
      },
      [&](const RightSample& a, const RightSample& b) {
        Index i = &a - sorted_data.right.data();
        Index j = &b - sorted_data.right.data();
        bool c = conj_close(a.sigma, b.sigma) && conj_close(a.r, b.r) &&
                 conj_close(a.g, b.g);
        if (gp && c) c = conj_close((*gp)[i], (*gp)[j]);
        return c;
      });

  RealTransform t;
  t.TF = pair_block_transform(sorted_data.n_left(), lp);
  t.TG = pair_block_transform(sorted_data.n_right(), rp);
  return t;
}

Vector GroupedData::mu_values(Index q) const {
  Vector v(group_size);
  for (Index i = 0; i < group_size; ++i) v(i) = left_groups[q][i].mu;
  return v;
}

Vector GroupedData::sigma_values(Index q) const {
  Vector v(group_size);
  for (Index i = 0; i < group_size; ++i) v(i) = right_groups[q][i].sigma;
  return v;
}

Matrix GroupedData::Lq(Index q) const {
  Matrix M(p, group_size);
  for (Index i = 0; i < group_size; ++i) M.col(i) = left_groups[q][i].ell;
  return M;
}

Matrix GroupedData::Rq(Index q) const {
  Matrix M(m, group_size);
  for (Index i = 0; i < group_size; ++i) M.col(i) = right_groups[q][i].r;
  return M;
}

Matrix GroupedData::Fq(Index q) const {
  Matrix M(m, group_size);
  for (Index i = 0; i < group_size; ++i) M.col(i) = left_groups[q][i].f;
  return M;
}

Matrix GroupedData::Gq(Index q) const {
  Matrix M(p, group_size);
  for (Index i = 0; i < group_size; ++i) M.col(i) = right_groups[q][i].g;
  return M;
}

InterpolationData GroupedData::base() const {
  InterpolationData d;
  d.m = m;
  d.p = p;
  d.left = left_groups.at(0);
  d.right = right_groups.at(0);
  return d;
}

std::vector<Complex> GroupedData::all_points() const {
  std::vector<Complex> pts;
  for (const auto& g : left_groups)
    for (const auto& s : g) pts.push_back(s.mu);
  for (const auto& g : right_groups)
    for (const auto& s : g) pts.push_back(s.sigma);
  return pts;
}

void GroupedData::validate() const {
  if (left_groups.empty() || right_groups.empty())
    throw SizeMismatchError("need at least one group per side");
  for (const auto& g : left_groups)
    if (Index(g.size()) != group_size)
      throw SizeMismatchError("left group size mismatch");
  for (const auto& g : right_groups)
    if (Index(g.size()) != group_size)
      throw SizeMismatchError("right group size mismatch");

  std::vector<Complex> lp, rp;
  for (const auto& g : left_groups)
    for (const auto& s : g) {
      if (s.ell.size() != p || s.f.size() != m)
        throw DataError("left sample has wrong vector dimensions");
      lp.push_back(s.mu);
    }
  for (const auto& g : right_groups)
    for (const auto& s : g) {
      if (s.r.size() != m || s.g.size() != p)
        throw DataError("right sample has wrong vector dimensions");
      rp.push_back(s.sigma);
    }
  for (std::size_t i = 0; i < lp.size(); ++i)
    for (std::size_t j = i + 1; j < lp.size(); ++j)
      if (lp[i] == lp[j])
        throw DuplicatePointError("duplicate left point " + point_str(lp[i]));
  for (std::size_t i = 0; i < rp.size(); ++i)
    for (std::size_t j = i + 1; j < rp.size(); ++j)
      if (rp[i] == rp[j])
        throw DuplicatePointError("duplicate right point " + point_str(rp[i]));
  for (Complex a : lp)
    for (Complex b : rp)
      if (a == b)
        throw DuplicatePointError(
            "left and right point sets must be disjoint; both contain " +
            point_str(a));
}

GroupedData make_grouped(int m, int p,
                         std::vector<std::vector<LeftSample>> left_groups,
                         std::vector<std::vector<RightSample>> right_groups) {
  GroupedData g;
  g.m = m;
  g.p = p;
  g.group_size = left_groups.empty() ? 0 : Index(left_groups[0].size());
  g.left_groups = std::move(left_groups);
  g.right_groups = std::move(right_groups);
  g.validate();
  return g;
}

namespace {

// Deals closure units (conjugate pairs, then real singles) round-robin into
// q groups of capacity n.
template <class Sample>
std::vector<std::vector<Sample>> deal_closed(const std::vector<Sample>& pool,
                                             const SortPlan& plan, int q,
                                             Index n) {
  std::vector<std::vector<Sample>> groups(q);
  std::vector<std::pair<Index, Index>> units;  // (old index, size 1 or 2)
  for (Index i = 0; i < plan.pairs; ++i)
    units.emplace_back(2 * i, 2);
  for (Index i = 2 * plan.pairs; i < Index(plan.order.size()); ++i)
    units.emplace_back(i, 1);

  for (std::size_t u = 0; u < units.size(); ++u) {
    auto [start, size] = units[u];
    int target = -1;
    for (int probe = 0; probe < q; ++probe) {
      int g = int((u + probe) % q);
      if (Index(groups[g].size()) + size <= n) {
        target = g;
        break;
      }
    }
    if (target < 0)
      throw ClosureError(
          "cannot deal conjugate pairs into groups of the requested size");
    for (Index k = 0; k < size; ++k)
      groups[target].push_back(pool[plan.order[start + k]]);
  }
  for (const auto& g : groups)
    if (Index(g.size()) != n)
      throw ClosureError(
          "cannot deal conjugate pairs into groups of the requested size");
  return groups;
}

template <class Sample, class KeyFn>
std::vector<std::vector<Sample>> deal_plain(std::vector<Sample> pool, int q,
                                            KeyFn key) {
  std::sort(pool.begin(), pool.end(),
            [&](const Sample& a, const Sample& b) { return key(a) < key(b); });
  std::vector<std::vector<Sample>> groups(q);
  for (std::size_t i = 0; i < pool.size(); ++i)
    groups[i % q].push_back(pool[i]);
  return groups;
}

auto point_key(Complex s) {
  return std::make_tuple(std::abs(s.imag()), s.real(), s.imag());
}

}  // namespace

GroupedData partition_groups(const InterpolationData& pool, int qf, int qg,
                             bool per_group_closure) {
  if (qf < 1 || qg < 1) throw SizeMismatchError("need Q_F >= 1 and Q_G >= 1");
  if (!pool.bitangential.empty())
    throw DataError(
        "grouped data requires disjoint left/right points; remove "
        "bitangential entries");
  if (pool.n_left() % qf != 0)
    throw SizeMismatchError("left pool size " + std::to_string(pool.n_left()) +
                            " is not divisible by Q_F = " + std::to_string(qf));
  if (pool.n_right() % qg != 0)
    throw SizeMismatchError("right pool size " +
                            std::to_string(pool.n_right()) +
                            " is not divisible by Q_G = " + std::to_string(qg));
  const Index n = pool.n_left() / qf;
  if (pool.n_right() / qg != n)
    throw SizeMismatchError(
        "left and right pools imply different group sizes (" +
        std::to_string(n) + " vs " + std::to_string(pool.n_right() / qg) +
        ")");

  GroupedData grouped;
  grouped.m = pool.m;
  grouped.p = pool.p;
  grouped.group_size = n;

  if (per_group_closure) {
    SortPlan lplan = plan_left(pool.left, nullptr);
    SortPlan rplan = plan_right(pool.right, nullptr);
    if (!lplan.closed || !rplan.closed)
      throw ClosureError(
          "per-group closure requested but the pool is not closed under "
          "conjugation");
    grouped.left_groups = deal_closed(pool.left, lplan, qf, n);
    grouped.right_groups = deal_closed(pool.right, rplan, qg, n);
    // Conjugate order within each group.
    for (auto& g : grouped.left_groups) {
      SortPlan plan = plan_left(g, nullptr);
      if (!plan.closed) throw ClosureError("group not closed after dealing");
      std::vector<LeftSample> sorted;
      for (Index i : plan.order) sorted.push_back(g[i]);
      g = std::move(sorted);
    }
    for (auto& g : grouped.right_groups) {
      SortPlan plan = plan_right(g, nullptr);
      if (!plan.closed) throw ClosureError("group not closed after dealing");
      std::vector<RightSample> sorted;
      for (Index i : plan.order) sorted.push_back(g[i]);
      g = std::move(sorted);
    }
  } else {
    grouped.left_groups = deal_plain(
        pool.left, qf, [](const LeftSample& s) { return point_key(s.mu); });
    grouped.right_groups = deal_plain(
        pool.right, qg, [](const RightSample& s) { return point_key(s.sigma); });
  }

  grouped.validate();
  return grouped;
}

}  // namespace sloewner

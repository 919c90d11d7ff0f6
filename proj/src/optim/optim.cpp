#include "ebib/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "ebib/errors.hpp"
#include "ebib/rng.hpp"

namespace ebib::optim {

OptimResult golden_section_max(const std::function<double(double)>& f, double lo, double hi, double tol,
                               int max_iter) {
  if (!(hi >= lo)) throw DomainError("golden_section_max: empty interval");
  if (!(tol > 0.0)) throw DomainError("golden_section_max: tol must be positive");
  OptimResult out;
  if (hi == lo) {
    out.x = Eigen::VectorXd::Constant(1, lo);
    out.value = f(lo);
    out.converged = true;
    return out;
  }
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  int it = 0;
  while (b - a > tol && it < max_iter) {
    // Ties keep the left part, so flat plateaus resolve toward smaller λ.
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
    ++it;
  }
  double x = (fc >= fd) ? c : d;
  double fx = std::max(fc, fd);
  for (double edge : {lo, hi}) {
    const double fe = f(edge);
    if (fe > fx || (fe == fx && edge < x)) {
      x = edge;
      fx = fe;
    }
  }
  const double h = std::max(b - a, 1e-7 * std::max(1.0, std::abs(x)));
  if (x - h >= lo && x + h <= hi) {
    const double fl = f(x - h), fr = f(x + h);
    const double denom = fl - 2.0 * fx + fr;
    if (denom < 0.0) {
      const double step = 0.5 * h * (fl - fr) / denom;
      if (std::abs(step) <= h) {
        const double xn = x + step;
        const double fn = f(xn);
        if (fn >= fx - 1e-12 * std::max(1.0, std::abs(fx))) {
          x = xn;
          fx = std::max(fn, fx);
        }
      }
    }
  }
  out.x = Eigen::VectorXd::Constant(1, x);
  out.value = fx;
  out.iterations = it;
  out.converged = (b - a) <= tol;
  return out;
}

namespace {

OptimResult nelder_mead_once(const std::function<double(const Eigen::VectorXd&)>& f, const Box& box,
                             const Eigen::VectorXd& x0, const NelderMeadOptions& opt) {
  const Eigen::Index d = box.size();
  const Eigen::VectorXd range = box.upper - box.lower;
  std::vector<Eigen::VectorXd> simplex(d + 1, x0);
  std::vector<double> vals(d + 1);
  for (Eigen::Index i = 0; i < d; ++i) {
    Eigen::VectorXd v = x0;
    const double step = 0.1 * range(i);
    v(i) = (v(i) + step <= box.upper(i)) ? v(i) + step : v(i) - step;
    simplex[i + 1] = box.clamp(v);
  }
  for (Eigen::Index i = 0; i <= d; ++i) vals[i] = f(simplex[i]);
  std::vector<Eigen::Index> order(d + 1);
  OptimResult out;
  int it = 0;
  for (; it < opt.max_iter; ++it) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return vals[a] > vals[b]; });
    const double best = vals[order.front()], worst = vals[order.back()];
    double size = 0.0;
    for (Eigen::Index i = 1; i <= d; ++i)
      size = std::max(size, ((simplex[order[i]] - simplex[order[0]]).array() / range.array()).abs().maxCoeff());
    if (std::abs(best - worst) <= opt.tol * (1.0 + std::abs(best)) && size < 1e-9) {
      out.converged = true;
      break;
    }
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
    for (Eigen::Index i = 0; i < d; ++i) centroid += simplex[order[i]];
    centroid /= static_cast<double>(d);
    const Eigen::Index w = order.back();
    const Eigen::VectorXd xr = box.clamp(centroid + (centroid - simplex[w]));
    const double fr = f(xr);
    if (fr > vals[order.front()]) {
      const Eigen::VectorXd xe = box.clamp(centroid + 2.0 * (centroid - simplex[w]));
      const double fe = f(xe);
      if (fe > fr) {
        simplex[w] = xe;
        vals[w] = fe;
      } else {
        simplex[w] = xr;
        vals[w] = fr;
      }
      continue;
    }
    if (fr > vals[order[d - 1]]) {
      simplex[w] = xr;
      vals[w] = fr;
      continue;
    }
    const bool outside = fr > vals[w];
    const Eigen::VectorXd xc =
        outside ? box.clamp(centroid + 0.5 * (xr - centroid)) : box.clamp(centroid + 0.5 * (simplex[w] - centroid));
    const double fcv = f(xc);
    if (fcv > std::max(outside ? fr : vals[w], -std::numeric_limits<double>::infinity())) {
      simplex[w] = xc;
      vals[w] = fcv;
      continue;
    }
    const Eigen::VectorXd xb = simplex[order.front()];
    for (Eigen::Index i = 1; i <= d; ++i) {
      simplex[order[i]] = box.clamp(xb + 0.5 * (simplex[order[i]] - xb));
      vals[order[i]] = f(simplex[order[i]]);
    }
  }
  const auto best = std::max_element(vals.begin(), vals.end()) - vals.begin();
  out.x = simplex[best];
  out.value = vals[best];
  out.iterations = it;
  return out;
}

}  // namespace

OptimResult nelder_mead_box_max(const std::function<double(const Eigen::VectorXd&)>& f, const Box& box,
                                const NelderMeadOptions& options, const std::optional<Eigen::VectorXd>& start) {
  const Eigen::Index d = box.size();
  if (box.upper.size() != d || (box.upper.array() < box.lower.array()).any())
    throw DomainError("nelder_mead_box_max: invalid box");
  if (!box.lower.allFinite() || !box.upper.allFinite()) throw DomainError("nelder_mead_box_max: box must be finite");
  if ((box.upper - box.lower).maxCoeff() == 0.0) {
    return {box.lower, f(box.lower), 0, true};
  }
  OptimResult best;
  best.value = -std::numeric_limits<double>::infinity();
  int total = 0;
  for (int r = 0; r < std::max(1, options.restarts); ++r) {
    Eigen::VectorXd x0;
    if (r == 0) {
      x0 = start ? box.clamp(*start) : Eigen::VectorXd(0.5 * (box.lower + box.upper));
    } else {
      Engine rng(derive_seed(options.seed, {static_cast<std::uint64_t>(r), stream::restarts}));
      x0.resize(d);
      for (Eigen::Index i = 0; i < d; ++i)
        x0(i) = box.lower(i) + random::uniform(rng) * (box.upper(i) - box.lower(i));
    }
    OptimResult res = nelder_mead_once(f, box, x0, options);
    total += res.iterations;
    if (res.value > best.value) best = res;
  }
  // Coordinate polish: golden-section per axis, then try snapping to the nearest box edge.
  Eigen::VectorXd x = best.x;
  double fx = best.value;
  for (int round = 0; round < options.polish_rounds; ++round) {
    const double before = fx;
    for (Eigen::Index i = 0; i < d; ++i) {
      const double w = box.upper(i) - box.lower(i);
      if (w == 0.0) continue;
      auto line = [&](double t) {
        Eigen::VectorXd z = x;
        z(i) = t;
        return f(z);
      };
      const OptimResult g = golden_section_max(line, box.lower(i), box.upper(i), 1e-11 * w);
      if (g.value >= fx) {
        x(i) = g.x(0);
        fx = g.value;
      }
      for (double edge : {box.lower(i), box.upper(i)}) {
        if (std::abs(x(i) - edge) < 1e-6 * w) {
          Eigen::VectorXd z = x;
          z(i) = edge;
          const double fz = f(z);
          if (fz >= fx) {
            x = z;
            fx = fz;
          }
        }
      }
    }
    if (std::abs(fx - before) <= options.tol * (1.0 + std::abs(fx))) break;
  }
  best.x = x;
  best.value = fx;
  best.iterations = total;
  return best;
}

}  // namespace ebib::optim

#include "core/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace eie {

double finite_diff_check(const std::function<Tensor(const Tensor&)>& f, Tensor x, double eps,
                         int coord_stride, double gradient_floor) {
  if (eps < 1e-4 || eps > 1e-2) throw UsageError("finite_diff_check: eps outside [1e-4, 1e-2]");
  if (coord_stride < 1) throw UsageError("finite_diff_check: coord_stride must be >= 1");
  x.set_requires_grad(true);
  x.zero_grad();
  std::vector<float> analytic;
  {
    Tape tape;
    TapeScope scope(tape);
    Tensor y = f(x);
    if (y.numel() != 1) throw UsageError("finite_diff_check: f must return a scalar");
    tape.backward(y);
    auto g = x.grad();
    analytic.assign(g.begin(), g.end());
    if (analytic.empty()) analytic.assign(static_cast<size_t>(x.numel()), 0.0f);
  }
  x.set_requires_grad(false);
  double worst = 0.0;
  auto data = x.mutable_data();
  for (size_t i = 0; i < data.size(); i += static_cast<size_t>(coord_stride)) {
    const float orig = data[i];
    // The perturbed values are rounded to float; dividing by the actually
    // applied step instead of 2*eps removes that representation error.
    const float xp = orig + static_cast<float>(eps);
    const float xm = orig - static_cast<float>(eps);
    data[i] = xp;
    const double fp = f(x).scalar_hi();
    data[i] = xm;
    const double fm = f(x).scalar_hi();
    data[i] = orig;
    const double central = (fp - fm) / (static_cast<double>(xp) - static_cast<double>(xm));
    const double denom = std::max(std::fabs(central), gradient_floor) + 1e-8;
    const double rel = std::fabs(analytic[i] - central) / denom;
    if (rel > worst) worst = rel;
  }
  x.set_requires_grad(true);
  return worst;
}

}  // namespace eie

#include "srmoe/grad_check.hpp"

#include <cmath>
#include <stdexcept>

namespace srmoe {

GradCheckResult grad_check(const std::function<double()>& loss_with_grads,
                           const std::vector<Param*>& params, double step,
                           double refine_below) {
    if (!(step > 0.0)) throw std::invalid_argument("grad_check: step must be positive");

    for (Param* p : params) p->zero_grad();
    (void)loss_with_grads();

    std::vector<Mat> analytic;
    analytic.reserve(params.size());
    for (Param* p : params) analytic.push_back(p->grad);

    GradCheckResult res;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Param& p = *params[pi];
        if (!p.trainable) continue;
        for (std::size_t i = 0; i < p.value.data.size(); ++i) {
            const double saved = p.value.data[i];
            const double a = analytic[pi].data[i];

            auto rel_at = [&](double h) {
                p.value.data[i] = saved + h;
                const double f_plus = loss_with_grads();
                p.value.data[i] = saved - h;
                const double f_minus = loss_with_grads();
                p.value.data[i] = saved;
                const double numeric = (f_plus - f_minus) / (2.0 * h);
                const double denom = std::max({std::abs(a), std::abs(numeric), 1e-5});
                return std::abs(a - numeric) / denom;
            };

            double rel = rel_at(step);
            for (double h = step / 10.0;
                 refine_below > 0.0 && rel > refine_below && h >= step / 10000.0; h /= 10.0) {
                rel = std::min(rel, rel_at(h));
            }
            if (rel > res.max_rel_err) {
                res.max_rel_err = rel;
                res.worst_param = p.name;
                res.worst_coord = static_cast<int>(i);
            }
        }
    }
    return res;
}

}  // namespace srmoe

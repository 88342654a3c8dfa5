#include "pta/time_grid.hpp"

#include <cmath>

#include "pta/errors.hpp"

namespace pta {

TimeGrid make_time_grid(const Eigen::VectorXd& times) {
    if (times.size() < 1) {
        throw ValidationError("time grid needs at least one point");
    }
    for (Eigen::Index i = 0; i < times.size(); ++i) {
        if (!std::isfinite(times(i))) {
            throw ValidationError("time grid contains a non-finite value");
        }
        if (i > 0 && !(times(i) > times(i - 1))) {
            throw ValidationError("time grid must be strictly increasing (violated at index " +
                                  std::to_string(i) + ")");
        }
    }
    return TimeGrid{times};
}

TimeGrid make_time_grid(const std::vector<double>& times) {
    Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(times.data(),
                                                          static_cast<Eigen::Index>(times.size()));
    return make_time_grid(v);
}

}  // namespace pta

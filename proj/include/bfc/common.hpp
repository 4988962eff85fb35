#ifndef BFC_COMMON_HPP
#define BFC_COMMON_HPP

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace bfc {

using Index = Eigen::Index;

// Dense storage is row-major throughout so that core slices serialize
// without transposition.
template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using RealOf = typename Eigen::NumTraits<Scalar>::Real;

using Cplx = std::complex<double>;

// Raised for malformed input files and container/format mismatches.
class data_format_error : public std::runtime_error {
public:
  explicit data_format_error(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

inline void require_range(bool cond, const std::string& msg) {
  if (!cond) throw std::out_of_range(msg);
}

} // namespace detail

} // namespace bfc

#endif

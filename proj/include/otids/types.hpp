#pragma once
#include <Eigen/Core>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace otids {

template <class Scalar_, int Rows_ = Eigen::Dynamic, int Cols_ = Eigen::Dynamic>
using rowmat_type = Eigen::Matrix<Scalar_, Rows_, Cols_, Eigen::RowMajor>;

template <class Scalar_, int Rows_ = Eigen::Dynamic>
using colvec_type = Eigen::Matrix<Scalar_, Rows_, 1>;

template <class Scalar_, int Cols_ = Eigen::Dynamic>
using rowvec_type = Eigen::Matrix<Scalar_, 1, Cols_>;

template <class Scalar_>
using rowarr_type = Eigen::Array<Scalar_, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Index = Eigen::Index;
using Matrix = rowmat_type<double>;
using Vector = colvec_type<double>;
using RowVector = rowvec_type<double>;
using MaskMatrix = rowarr_type<bool>;
using Labels = colvec_type<int>;
using IndexList = std::vector<Index>;

enum class ErrorCode
{
    unknown_schema,
    missing_labels,
    schema_mismatch,
    parse_error,
    io_error,
    empty_column,
    stratum_too_small,
    not_interpolated,
    invalid_component_count,
    invalid_config,
    empty_node,
    degenerate_labels,
    shape_mismatch,
    not_finite,
    empty_input,
    length_mismatch,
    empty_evaluation,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error
{
    ErrorCode code_;

public:
    Error(ErrorCode code, const std::string& msg)
        : std::runtime_error(std::string(to_string(code)) + ": " + msg), code_(code)
    {}

    ErrorCode code() const noexcept { return code_; }
};

} // namespace otids

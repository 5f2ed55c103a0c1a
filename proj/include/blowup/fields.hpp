#pragma once

#include "blowup/expr.hpp"

#include <functional>
#include <iosfwd>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace blowup {

/// Default zero tolerance: effectively an exact-zero test.
inline constexpr double kDefaultZeroTol = 1e-300;

/// A scalar function on R^n with a pointwise gradient.
///
/// Copies share the (immutable) evaluators, so a field is cheap to pass by
/// value and safe to evaluate concurrently.
class ScalarField {
public:
    using ValueFn = std::function<double(std::span<const double>)>;
    /// Writes the gradient into the second argument, returns the value.
    using ValueGradFn = std::function<double(std::span<const double>, std::span<double>)>;

    ScalarField(int dimension, ValueFn value, ValueGradFn value_grad);

    static ScalarField from_expr(Expr expr);
    static ScalarField from_source(std::string_view source, int dimension);

    int dimension() const { return dim_; }
    double value(std::span<const double> x) const { return (*value_)(x); }
    double value_grad(std::span<const double> x, std::span<double> grad) const {
        return (*value_grad_)(x, grad);
    }
    std::vector<double> gradient(std::span<const double> x) const;

    /// Text of the source expression when the field came from one.
    const std::string& description() const { return description_; }
    ScalarField with_description(std::string text) const;

private:
    int dim_;
    std::shared_ptr<const ValueFn> value_;
    std::shared_ptr<const ValueGradFn> value_grad_;
    std::string description_;
};

/// f = (f_1, ..., f_m), all components on the same R^n.
class VectorMapping {
public:
    explicit VectorMapping(std::vector<ScalarField> components);

    int dimension() const { return components_.front().dimension(); }
    std::size_t size() const { return components_.size(); }
    const ScalarField& operator[](std::size_t i) const { return components_[i]; }

private:
    std::vector<ScalarField> components_;
};

struct Box {
    std::vector<double> lo;
    std::vector<double> hi;
};

struct Ball {
    std::vector<double> center;
    double radius = 1.0;
};

/// Axis-aligned box or closed ball in R^n.
class Domain {
public:
    Domain(Box box);
    Domain(Ball ball);

    /// Parses `box:lo1,..,lon:hi1,..,hin` or `ball:c1,..,cn:radius`.
    static Domain parse(std::string_view spec);

    int dimension() const;
    bool is_box() const { return std::holds_alternative<Box>(shape_); }
    bool is_ball() const { return std::holds_alternative<Ball>(shape_); }
    const Box& box() const { return std::get<Box>(shape_); }
    const Ball& ball() const { return std::get<Ball>(shape_); }

    bool contains(std::span<const double> x, double slack = 0.0) const;
    Box bounding_box() const;
    double volume() const;

    /// Inverse of parse(); exact for doubles.
    std::string to_string() const;

private:
    std::variant<Box, Ball> shape_;
};

/// |grad f(x)| / |f(x)| off the zero set, 0 where |f(x)| <= zero_tol.
double quotient_V(const ScalarField& field, std::span<const double> x, double zero_tol = kDefaultZeroTol);

/// sqrt(sum |grad f_i|^2) / sqrt(sum f_i^2), 0 on the common zero set.
double mapping_quotient(const VectorMapping& mapping, std::span<const double> x,
                        double zero_tol = kDefaultZeroTol);

struct ZeroCell {
    std::vector<int> index;  ///< Integer cell coordinates per axis.
    std::vector<double> lo;
    std::vector<double> hi;
};

struct ZeroCellReport {
    int resolution = 0;
    double tolerance = 0.0;
    std::vector<ZeroCell> cells;
};

/// Grid scan of the domain's bounding box for cells that contain a zero.
///
/// A cell is reported when its corner values change sign strictly, or when
/// a grid vertex it owns has |f| <= tolerance. Vertex ownership is
/// half-open: vertex k along an axis belongs to cell min(k, resolution-1),
/// so each near-zero vertex is reported by exactly one cell. Only cells
/// that intersect the domain are kept. An empty report is not a proof that
/// f has no zeros.
ZeroCellReport zero_set_probe(const ScalarField& field, const Domain& domain, int resolution,
                              double tolerance = 1e-12);

/// g = f^2 with grad g = 2 f grad f.
ScalarField square_field(const ScalarField& field);

/// c * f.
ScalarField scale_field(const ScalarField& field, double c);

/// f - f(a), the field behind log|f(x) - f(a)|.
ScalarField shift_field(const ScalarField& field, std::span<const double> a);

/// u -> f(center + radius * u), used to move a ball onto the unit ball.
ScalarField affine_pullback(const ScalarField& field, std::span<const double> center, double radius);

struct Sample {
    std::vector<double> point;
    double value = 0.0;
};

/// McShane extension x -> min_i (v_i + L |x - p_i|).
///
/// Throws PreconditionError naming the first violating pair when two
/// samples are not L-compatible. Gradient ties go to the lowest index.
ScalarField mcshane_extend(std::vector<Sample> samples, double lipschitz);

/// CSV with header `x1,..,xn,value` (n inferred from the header).
std::vector<Sample> read_samples_csv(std::istream& in);

/// Largest |f(x)-f(y)|/|x-y| over all pairs of a uniform grid with
/// `per_axis` points per axis on the domain's bounding box.
double grid_lipschitz_estimate(const ScalarField& field, const Domain& domain, int per_axis);

} // namespace blowup

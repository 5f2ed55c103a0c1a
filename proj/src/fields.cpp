#include "blowup/fields.hpp"

#include "blowup/error.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <istream>
#include <sstream>

namespace blowup {

namespace {

/// Gradient storage that stays on the stack for the usual small n.
class GradBuffer {
public:
    explicit GradBuffer(std::size_t n) : n_(n) {
        if (n > small_.size()) heap_.resize(n);
    }
    std::span<double> span() { return n_ <= small_.size() ? std::span<double>(small_.data(), n_) : std::span<double>(heap_); }

private:
    std::size_t n_;
    std::array<double, 8> small_{};
    std::vector<double> heap_;
};

double norm2(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

double distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

std::vector<double> parse_list(std::string_view text, std::string_view what) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t comma = text.find(',', start);
        const std::string_view tok = text.substr(start, comma == std::string_view::npos ? text.npos : comma - start);
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size()) {
            throw PreconditionError("bad number '" + std::string(tok) + "' in " + std::string(what));
        }
        out.push_back(v);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

} // namespace

// ---------------------------------------------------------------------------
// ScalarField

ScalarField::ScalarField(int dimension, ValueFn value, ValueGradFn value_grad)
    : dim_(dimension),
      value_(std::make_shared<const ValueFn>(std::move(value))),
      value_grad_(std::make_shared<const ValueGradFn>(std::move(value_grad))) {
    if (dimension < 1) throw PreconditionError("field dimension must be at least 1");
}

ScalarField ScalarField::from_expr(Expr expr) {
    auto shared = std::make_shared<const Expr>(std::move(expr));
    ScalarField f(
        shared->dimension(), [shared](std::span<const double> x) { return shared->eval(x); },
        [shared](std::span<const double> x, std::span<double> g) { return shared->eval_grad(x, g); });
    f.description_ = shared->unparse();
    return f;
}

ScalarField ScalarField::from_source(std::string_view source, int dimension) {
    return from_expr(Expr::parse(source, dimension)).with_description(std::string(source));
}

std::vector<double> ScalarField::gradient(std::span<const double> x) const {
    std::vector<double> g(static_cast<std::size_t>(dim_));
    value_grad(x, g);
    return g;
}

ScalarField ScalarField::with_description(std::string text) const {
    ScalarField copy = *this;
    copy.description_ = std::move(text);
    return copy;
}

VectorMapping::VectorMapping(std::vector<ScalarField> components) : components_(std::move(components)) {
    if (components_.empty()) throw PreconditionError("mapping needs at least one component");
    for (const auto& c : components_) {
        if (c.dimension() != components_.front().dimension()) {
            throw PreconditionError("mapping components must share a dimension");
        }
    }
}

// ---------------------------------------------------------------------------
// Domain

Domain::Domain(Box box) : shape_(std::move(box)) {
    const Box& b = std::get<Box>(shape_);
    if (b.lo.empty() || b.lo.size() != b.hi.size()) throw PreconditionError("box corners must share a nonzero dimension");
    for (std::size_t i = 0; i < b.lo.size(); ++i) {
        if (!(b.lo[i] < b.hi[i])) throw PreconditionError("box requires lo < hi on every axis");
    }
}

Domain::Domain(Ball ball) : shape_(std::move(ball)) {
    const Ball& b = std::get<Ball>(shape_);
    if (b.center.empty()) throw PreconditionError("ball center must be nonempty");
    if (!(b.radius > 0.0)) throw PreconditionError("ball radius must be positive");
}

Domain Domain::parse(std::string_view spec) {
    const auto first = spec.find(':');
    const auto second = first == spec.npos ? spec.npos : spec.find(':', first + 1);
    if (first == spec.npos || second == spec.npos || spec.find(':', second + 1) != spec.npos) {
        throw PreconditionError("domain must be box:lo..:hi.. or ball:c..:radius, got '" + std::string(spec) + "'");
    }
    const std::string_view kind = spec.substr(0, first);
    const auto a = parse_list(spec.substr(first + 1, second - first - 1), "domain");
    const auto b = parse_list(spec.substr(second + 1), "domain");
    if (kind == "box") {
        if (a.size() != b.size()) throw PreconditionError("box corners have different dimensions");
        return Domain(Box{a, b});
    }
    if (kind == "ball") {
        if (b.size() != 1) throw PreconditionError("ball radius must be a single number");
        return Domain(Ball{a, b[0]});
    }
    throw PreconditionError("unknown domain kind '" + std::string(kind) + "'");
}

int Domain::dimension() const {
    return static_cast<int>(is_box() ? box().lo.size() : ball().center.size());
}

bool Domain::contains(std::span<const double> x, double slack) const {
    if (is_box()) {
        const Box& b = box();
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (x[i] < b.lo[i] - slack || x[i] > b.hi[i] + slack) return false;
        }
        return true;
    }
    const Ball& b = ball();
    return distance(x, b.center) <= b.radius + slack;
}

Box Domain::bounding_box() const {
    if (is_box()) return box();
    const Ball& b = ball();
    Box out{b.center, b.center};
    for (std::size_t i = 0; i < b.center.size(); ++i) {
        out.lo[i] -= b.radius;
        out.hi[i] += b.radius;
    }
    return out;
}

double Domain::volume() const {
    if (is_box()) {
        double v = 1.0;
        for (std::size_t i = 0; i < box().lo.size(); ++i) v *= box().hi[i] - box().lo[i];
        return v;
    }
    const double n = dimension();
    return std::pow(M_PI, n / 2.0) / std::tgamma(n / 2.0 + 1.0) * std::pow(ball().radius, n);
}

std::string Domain::to_string() const {
    auto join = [](const std::vector<double>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) s += ',';
            s += format_double(v[i]);
        }
        return s;
    };
    if (is_box()) return "box:" + join(box().lo) + ":" + join(box().hi);
    return "ball:" + join(ball().center) + ":" + format_double(ball().radius);
}

// ---------------------------------------------------------------------------
// Quotients

double quotient_V(const ScalarField& field, std::span<const double> x, double zero_tol) {
    GradBuffer buf(static_cast<std::size_t>(field.dimension()));
    auto g = buf.span();
    double f = 0.0;
    try {
        f = field.value_grad(x, g);
    } catch (const DomainError&) {
        // The gradient may be undefined exactly on Z, where V = 0 anyway.
        if (std::fabs(field.value(x)) <= zero_tol) return 0.0;
        throw;
    }
    const double af = std::fabs(f);
    if (af <= zero_tol) return 0.0;
    return std::sqrt(norm2(g)) / af;
}

double mapping_quotient(const VectorMapping& mapping, std::span<const double> x, double zero_tol) {
    GradBuffer buf(static_cast<std::size_t>(mapping.dimension()));
    auto g = buf.span();
    double value_sq = 0.0;
    double grad_sq = 0.0;
    for (std::size_t i = 0; i < mapping.size(); ++i) {
        const double f = mapping[i].value_grad(x, g);
        value_sq += f * f;
        grad_sq += norm2(g);
    }
    const double magnitude = std::sqrt(value_sq);
    if (magnitude <= zero_tol) return 0.0;
    return std::sqrt(grad_sq) / magnitude;
}

// ---------------------------------------------------------------------------
// Zero-set probe

ZeroCellReport zero_set_probe(const ScalarField& field, const Domain& domain, int resolution, double tolerance) {
    if (resolution < 2) throw PreconditionError("zero probe resolution must be at least 2");
    const int n = domain.dimension();
    if (n != field.dimension()) throw PreconditionError("field and domain dimensions differ");
    const Box bb = domain.bounding_box();
    const int verts_per_axis = resolution + 1;

    std::size_t total_verts = 1;
    std::size_t total_cells = 1;
    for (int i = 0; i < n; ++i) {
        total_verts *= static_cast<std::size_t>(verts_per_axis);
        total_cells *= static_cast<std::size_t>(resolution);
    }

    auto coord = [&](int axis, int k) {
        if (k == resolution) return bb.hi[axis];
        return bb.lo[axis] + (bb.hi[axis] - bb.lo[axis]) * k / resolution;
    };

    std::vector<double> values(total_verts);
    std::vector<double> x(static_cast<std::size_t>(n));
    std::vector<int> idx(static_cast<std::size_t>(n));
    for (std::size_t v = 0; v < total_verts; ++v) {
        std::size_t rem = v;
        for (int i = 0; i < n; ++i) {
            idx[i] = static_cast<int>(rem % verts_per_axis);
            rem /= verts_per_axis;
            x[i] = coord(i, idx[i]);
        }
        values[v] = field.value(x);
    }

    ZeroCellReport report;
    report.resolution = resolution;
    report.tolerance = tolerance;

    std::vector<int> corner(static_cast<std::size_t>(n));
    for (std::size_t c = 0; c < total_cells; ++c) {
        std::size_t rem = c;
        for (int i = 0; i < n; ++i) {
            idx[i] = static_cast<int>(rem % resolution);
            rem /= resolution;
        }
        bool positive = false;
        bool negative = false;
        bool owned_zero = false;
        for (int mask = 0; mask < (1 << n); ++mask) {
            std::size_t flat = 0;
            std::size_t stride = 1;
            bool owned = true;
            for (int i = 0; i < n; ++i) {
                const int bit = (mask >> i) & 1;
                corner[i] = idx[i] + bit;
                // The upper vertex is owned only by the last cell on that axis.
                if (bit == 1 && idx[i] != resolution - 1) owned = false;
                flat += static_cast<std::size_t>(corner[i]) * stride;
                stride *= static_cast<std::size_t>(verts_per_axis);
            }
            const double f = values[flat];
            if (f > tolerance) positive = true;
            if (f < -tolerance) negative = true;
            if (owned && std::fabs(f) <= tolerance) owned_zero = true;
        }
        if (!((positive && negative) || owned_zero)) continue;

        ZeroCell cell;
        cell.index = idx;
        cell.lo.resize(static_cast<std::size_t>(n));
        cell.hi.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            cell.lo[i] = coord(i, idx[i]);
            cell.hi[i] = coord(i, idx[i] + 1);
        }
        if (domain.is_ball()) {
            // Keep the cell only if its closest point to the center is inside.
            const Ball& b = domain.ball();
            double d2 = 0.0;
            for (int i = 0; i < n; ++i) {
                const double p = std::clamp(b.center[i], cell.lo[i], cell.hi[i]);
                d2 += (p - b.center[i]) * (p - b.center[i]);
            }
            if (std::sqrt(d2) > b.radius) continue;
        }
        report.cells.push_back(std::move(cell));
    }
    return report;
}

// ---------------------------------------------------------------------------
// Field combinators

ScalarField square_field(const ScalarField& field) {
    ScalarField g(
        field.dimension(),
        [field](std::span<const double> x) {
            const double f = field.value(x);
            return f * f;
        },
        [field](std::span<const double> x, std::span<double> grad) {
            const double f = field.value_grad(x, grad);
            for (double& d : grad) d *= 2.0 * f;
            return f * f;
        });
    return g.with_description("(" + field.description() + ")^2");
}

ScalarField scale_field(const ScalarField& field, double c) {
    ScalarField g(
        field.dimension(), [field, c](std::span<const double> x) { return c * field.value(x); },
        [field, c](std::span<const double> x, std::span<double> grad) {
            const double f = field.value_grad(x, grad);
            for (double& d : grad) d *= c;
            return c * f;
        });
    return g.with_description(format_double(c) + "*(" + field.description() + ")");
}

ScalarField shift_field(const ScalarField& field, std::span<const double> a) {
    const double fa = field.value(a);
    ScalarField g(
        field.dimension(), [field, fa](std::span<const double> x) { return field.value(x) - fa; },
        [field, fa](std::span<const double> x, std::span<double> grad) { return field.value_grad(x, grad) - fa; });
    return g.with_description("(" + field.description() + ") - " + format_double(fa));
}

ScalarField affine_pullback(const ScalarField& field, std::span<const double> center, double radius) {
    if (!(radius > 0.0)) throw PreconditionError("pullback radius must be positive");
    std::vector<double> c(center.begin(), center.end());
    auto map = [c, radius](std::span<const double> u, std::span<double> x) {
        for (std::size_t i = 0; i < c.size(); ++i) x[i] = c[i] + radius * u[i];
    };
    ScalarField g(
        field.dimension(),
        [field, map, n = c.size()](std::span<const double> u) {
            GradBuffer buf(n);
            auto x = buf.span();
            map(u, x);
            return field.value(x);
        },
        [field, map, radius, n = c.size()](std::span<const double> u, std::span<double> grad) {
            GradBuffer buf(n);
            auto x = buf.span();
            map(u, x);
            const double f = field.value_grad(x, grad);
            for (double& d : grad) d *= radius;
            return f;
        });
    return g.with_description(field.description());
}

// ---------------------------------------------------------------------------
// McShane extension

ScalarField mcshane_extend(std::vector<Sample> samples, double lipschitz) {
    if (samples.empty()) throw PreconditionError("McShane extension needs at least one sample");
    if (!(lipschitz >= 0.0)) throw PreconditionError("Lipschitz constant must be nonnegative");
    const std::size_t n = samples.front().point.size();
    for (const auto& s : samples) {
        if (s.point.size() != n || n == 0) throw PreconditionError("samples must share a nonzero dimension");
    }
    for (std::size_t i = 0; i < samples.size(); ++i) {
        for (std::size_t j = i + 1; j < samples.size(); ++j) {
            const double gap = std::fabs(samples[i].value - samples[j].value);
            const double allowed = lipschitz * distance(samples[i].point, samples[j].point);
            if (gap > allowed * (1.0 + 1e-12) + 1e-300) {
                throw PreconditionError("samples " + std::to_string(i) + " and " + std::to_string(j) +
                                        " are not L-compatible: |dv| = " + format_double(gap) +
                                        " > L|dp| = " + format_double(allowed));
            }
        }
    }
    auto shared = std::make_shared<const std::vector<Sample>>(std::move(samples));
    auto active = [shared, lipschitz](std::span<const double> x, double& best) {
        std::size_t arg = 0;
        best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < shared->size(); ++i) {
            const double v = (*shared)[i].value + lipschitz * distance(x, (*shared)[i].point);
            if (v < best) {
                best = v;
                arg = i;
            }
        }
        return arg;
    };
    return ScalarField(
               static_cast<int>(n),
               [active](std::span<const double> x) {
                   double best = 0.0;
                   active(x, best);
                   return best;
               },
               [active, shared, lipschitz](std::span<const double> x, std::span<double> grad) {
                   double best = 0.0;
                   const auto& p = (*shared)[active(x, best)].point;
                   const double r = distance(x, p);
                   for (std::size_t k = 0; k < grad.size(); ++k) {
                       grad[k] = r > 0.0 ? lipschitz * (x[k] - p[k]) / r : 0.0;
                   }
                   return best;
               })
        .with_description("mcshane(" + std::to_string(shared->size()) + " samples, L=" + format_double(lipschitz) +
                          ")");
}

std::vector<Sample> read_samples_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw PreconditionError("sample CSV is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string col;
        while (std::getline(ss, col, ',')) header.push_back(col);
    }
    if (header.size() < 2 || header.back() != "value") {
        throw PreconditionError("sample CSV header must be x1,..,xn,value");
    }
    for (std::size_t i = 0; i + 1 < header.size(); ++i) {
        if (header[i] != "x" + std::to_string(i + 1)) {
            throw PreconditionError("sample CSV column " + std::to_string(i + 1) + " must be named x" +
                                    std::to_string(i + 1));
        }
    }
    const std::size_t n = header.size() - 1;

    std::vector<Sample> out;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto values = parse_list(line, "sample CSV row " + std::to_string(row));
        if (values.size() != n + 1) {
            throw PreconditionError("sample CSV row " + std::to_string(row) + " has " +
                                    std::to_string(values.size()) + " columns, expected " + std::to_string(n + 1));
        }
        out.push_back(Sample{std::vector<double>(values.begin(), values.end() - 1), values.back()});
    }
    return out;
}

double grid_lipschitz_estimate(const ScalarField& field, const Domain& domain, int per_axis) {
    if (per_axis < 2) throw PreconditionError("grid needs at least 2 points per axis");
    const int n = domain.dimension();
    const Box bb = domain.bounding_box();
    std::size_t total = 1;
    for (int i = 0; i < n; ++i) total *= static_cast<std::size_t>(per_axis);

    std::vector<std::vector<double>> pts;
    std::vector<double> vals;
    std::vector<double> x(static_cast<std::size_t>(n));
    for (std::size_t k = 0; k < total; ++k) {
        std::size_t rem = k;
        for (int i = 0; i < n; ++i) {
            const int j = static_cast<int>(rem % per_axis);
            rem /= per_axis;
            x[i] = bb.lo[i] + (bb.hi[i] - bb.lo[i]) * j / (per_axis - 1);
        }
        if (!domain.contains(x)) continue;
        pts.push_back(x);
        vals.push_back(field.value(x));
    }
    double best = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            best = std::max(best, std::fabs(vals[i] - vals[j]) / distance(pts[i], pts[j]));
        }
    }
    return best;
}

} // namespace blowup

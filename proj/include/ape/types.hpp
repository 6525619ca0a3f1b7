#pragma once

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

namespace ape {

/// A point in the parameter space of a testing problem.
struct ParameterPoint {
    std::vector<double> coords;
    std::string label;

    ParameterPoint() = default;
    ParameterPoint(std::vector<double> c, std::string l = {})
        : coords(std::move(c)), label(std::move(l)) {}
    ParameterPoint(std::initializer_list<double> c) : coords(c) {}

    std::size_t dim() const { return coords.size(); }
    double operator[](std::size_t i) const { return coords[i]; }
    bool finite() const;
    std::string to_string() const;

    friend bool operator==(const ParameterPoint& a, const ParameterPoint& b) {
        return a.coords == b.coords;
    }
};

/// Null mass concentrated at a single parameter value.
struct PointMass {
    ParameterPoint point;
};

/// Uniform distribution along one coordinate of the parameter, other
/// coordinates held at `anchor`. Used for "base distribution" null
/// components such as a uniform nuisance parameter on an interval.
struct UniformSegment {
    ParameterPoint anchor;
    std::size_t axis = 0;
    double lower = 0.0;
    double upper = 0.0;
    std::string id;
    // Midpoint-rule node count when the problem has no closed form.
    std::size_t nodes = 201;

    ParameterPoint at(double value) const;
    bool degenerate() const { return upper <= lower; }
};

/// One component of the discretized null: a point mass or a base
/// distribution over a segment of the null space.
struct NullComponent {
    std::variant<PointMass, UniformSegment> kind;

    static NullComponent point(ParameterPoint p) { return {PointMass{std::move(p)}}; }
    static NullComponent segment(UniformSegment s) { return {std::move(s)}; }

    bool is_point() const { return std::holds_alternative<PointMass>(kind); }
    const ParameterPoint& as_point() const { return std::get<PointMass>(kind).point; }
    const UniformSegment& as_segment() const { return std::get<UniformSegment>(kind); }
    std::string describe() const;

    friend bool operator==(const NullComponent& a, const NullComponent& b);
};

/// Ordered support points of the discretized alternative.
struct AlternativeSupport {
    std::vector<ParameterPoint> points;

    std::size_t size() const { return points.size(); }
    const ParameterPoint& operator[](std::size_t j) const { return points[j]; }
};

/// Where a rejection probability is evaluated: a parameter value or a
/// null mixture component.
using Target = std::variant<ParameterPoint, NullComponent>;

std::string describe(const Target& t);

}  // namespace ape

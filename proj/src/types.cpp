#include "ape/types.hpp"

#include <cmath>
#include <sstream>

namespace ape {

bool ParameterPoint::finite() const {
    for (double c : coords)
        if (!std::isfinite(c)) return false;
    return true;
}

std::string ParameterPoint::to_string() const {
    if (!label.empty()) return label;
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < coords.size(); ++i) {
        if (i) os << ", ";
        os << coords[i];
    }
    os << ')';
    return os.str();
}

ParameterPoint UniformSegment::at(double value) const {
    ParameterPoint p = anchor;
    p.label.clear();
    p.coords.at(axis) = value;
    return p;
}

std::string NullComponent::describe() const {
    if (is_point()) return "point " + as_point().to_string();
    const auto& s = as_segment();
    std::ostringstream os;
    os << "uniform[" << s.lower << ", " << s.upper << "] on axis " << s.axis << " at "
       << s.anchor.to_string();
    return os.str();
}

bool operator==(const NullComponent& a, const NullComponent& b) {
    if (a.is_point() != b.is_point()) return false;
    if (a.is_point()) return a.as_point() == b.as_point();
    const auto& x = a.as_segment();
    const auto& y = b.as_segment();
    return x.anchor == y.anchor && x.axis == y.axis && x.lower == y.lower && x.upper == y.upper;
}

std::string describe(const Target& t) {
    if (const auto* p = std::get_if<ParameterPoint>(&t)) return p->to_string();
    return std::get<NullComponent>(t).describe();
}

}  // namespace ape

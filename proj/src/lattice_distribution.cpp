#include "cramer/lattice_distribution.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "cramer/detail/numfmt.hpp"
#include "cramer/errors.hpp"

namespace cramer {

LatticeDistribution::LatticeDistribution(double span, std::vector<double> masses, double remainder)
    : span_(span), masses_(std::move(masses)), remainder_(remainder) {
    if (!(span_ > 0.0) || !std::isfinite(span_)) throw DomainError("lattice span must be positive");
    if (masses_.empty()) throw DomainError("lattice needs at least one mass");
    if (!(remainder_ >= 0.0)) throw DomainError("lattice remainder must be nonnegative");
    tails_.resize(masses_.size());
    double tail = 1.0;
    for (std::size_t m = 0; m < masses_.size(); ++m) {
        if (!(masses_[m] >= 0.0) || !std::isfinite(masses_[m]))
            throw DomainError("lattice masses must be finite and nonnegative");
        tail -= masses_[m];
        if (tail < 0.0) tail = 0.0;
        tails_[m] = tail;
    }
}

double LatticeDistribution::total_mass() const noexcept {
    double s = 0.0;
    for (double g : masses_) s += g;
    return s;
}

double LatticeDistribution::mean() const noexcept {
    double s = 0.0;
    for (std::size_t n = 0; n < masses_.size(); ++n) s += static_cast<double>(n) * masses_[n];
    return s * span_;
}

double LatticeDistribution::variance() const noexcept {
    double m1 = 0.0, m2 = 0.0;
    for (std::size_t n = 0; n < masses_.size(); ++n) {
        const double x = static_cast<double>(n) * span_;
        m1 += x * masses_[n];
        m2 += x * x * masses_[n];
    }
    return m2 - m1 * m1;
}

void write_lattice(std::ostream& os, const LatticeDistribution& dist) {
    using detail::shortest;
    os << "# lattice span=" << shortest(dist.span()) << " remainder=" << shortest(dist.remainder())
       << " size=" << dist.size() << '\n';
    const auto masses = dist.masses();
    for (std::size_t n = 0; n < masses.size(); ++n) {
        os << shortest(static_cast<double>(n) * dist.span()) << ' ' << shortest(masses[n]) << '\n';
    }
}

namespace {

double header_field(const std::string& header, const std::string& key) {
    const auto pos = header.find(key + "=");
    if (pos == std::string::npos) throw ParseError("lattice header lacks " + key);
    const auto start = pos + key.size() + 1;
    const auto end = header.find(' ', start);
    const auto v = detail::parse_double(
        std::string_view(header).substr(start, end == std::string::npos ? std::string::npos : end - start));
    if (!v) throw ParseError("bad lattice header value for " + key);
    return *v;
}

}  // namespace

LatticeDistribution read_lattice(std::istream& is) {
    std::string header;
    if (!std::getline(is, header) || header.rfind("# lattice", 0) != 0)
        throw ParseError("missing lattice header");
    const double span = header_field(header, "span");
    const double remainder = header_field(header, "remainder");
    const double size = header_field(header, "size");
    if (!(size >= 1.0) || size != std::floor(size)) throw ParseError("bad lattice size");
    const auto n = static_cast<std::size_t>(size);

    std::vector<double> masses;
    masses.reserve(n);
    std::string line;
    while (masses.size() < n && std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream row(line);
        std::string point, mass;
        if (!(row >> point >> mass)) throw ParseError("lattice row needs two columns: " + line);
        const auto x = detail::parse_double(point);
        const auto g = detail::parse_double(mass);
        if (!x || !g) throw ParseError("bad number in lattice row: " + line);
        const double expected = static_cast<double>(masses.size()) * span;
        if (std::abs(*x - expected) > 1e-9 * std::max(1.0, expected))
            throw ParseError("lattice rows must be consecutive multiples of the span");
        masses.push_back(*g);
    }
    if (masses.size() != n) throw ParseError("lattice file truncated");
    return LatticeDistribution(span, std::move(masses), remainder);
}

}  // namespace cramer

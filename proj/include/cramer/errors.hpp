#pragma once

#include <stdexcept>
#include <string>

namespace cramer {

// Exit-code classes used by the command line front end.
enum class ErrorClass { parse = 2, domain = 3, convergence = 4, budget = 5 };

class Error : public std::runtime_error {
public:
    Error(ErrorClass cls, const std::string& what) : std::runtime_error(what), class_(cls) {}
    ErrorClass error_class() const noexcept { return class_; }
    int exit_code() const noexcept { return static_cast<int>(class_); }

private:
    ErrorClass class_;
};

class DomainError : public Error {
public:
    explicit DomainError(const std::string& what) : Error(ErrorClass::domain, what) {}
};

class ParseError : public Error {
public:
    explicit ParseError(const std::string& what) : Error(ErrorClass::parse, what) {}
};

class ConvergenceError : public Error {
public:
    explicit ConvergenceError(const std::string& what) : Error(ErrorClass::convergence, what) {}
};

class BudgetError : public Error {
public:
    explicit BudgetError(const std::string& what) : Error(ErrorClass::budget, what) {}
};

/// Discretization would drop more tail mass than allowed.
class TailError : public DomainError {
public:
    TailError(const std::string& what, double tail_mass) : DomainError(what), tail_mass_(tail_mass) {}
    double tail_mass() const noexcept { return tail_mass_; }

private:
    double tail_mass_;
};

/// Premium rate does not exceed the expected claim rate, so ruin is certain.
class LoadingError : public DomainError {
public:
    explicit LoadingError(const std::string& what) : DomainError(what) {}
    double ruin_probability() const noexcept { return 1.0; }
};

class GridError : public DomainError {
public:
    explicit GridError(const std::string& what) : DomainError(what) {}
};

class SizeError : public DomainError {
public:
    explicit SizeError(const std::string& what) : DomainError(what) {}
};

class LatticeSeverityError : public DomainError {
public:
    explicit LatticeSeverityError(const std::string& what) : DomainError(what) {}
};

/// g(a)/a never reaches the premium rate on the admissible tilt range.
class NoRootError : public ConvergenceError {
public:
    NoRootError(const std::string& what, double sup_ratio)
        : ConvergenceError(what), sup_ratio_(sup_ratio) {}
    double sup_ratio() const noexcept { return sup_ratio_; }

private:
    double sup_ratio_;
};

class RootBracketError : public ConvergenceError {
public:
    explicit RootBracketError(const std::string& what) : ConvergenceError(what) {}
};

class InsufficientRuinsError : public ConvergenceError {
public:
    InsufficientRuinsError(const std::string& what, std::size_t ruined)
        : ConvergenceError(what), ruined_(ruined) {}
    std::size_t ruined() const noexcept { return ruined_; }

private:
    std::size_t ruined_;
};

}  // namespace cramer

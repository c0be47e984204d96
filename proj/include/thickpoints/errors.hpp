#pragma once

#include <stdexcept>
#include <string>

namespace thick {

// Input outside the regime where a formula or bound is claimed.
class RegimeError : public std::invalid_argument {
public:
    explicit RegimeError(const std::string& what) : std::invalid_argument(what) {}
};

// A numerical guarantee (truncation mass, step budget, ...) could not be met.
class CertificateError : public std::runtime_error {
public:
    explicit CertificateError(const std::string& what) : std::runtime_error(what) {}
};

class BudgetError : public CertificateError {
public:
    explicit BudgetError(const std::string& what) : CertificateError(what) {}
};

// Malformed or unreadable persisted data.
class FormatError : public std::runtime_error {
public:
    explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace thick

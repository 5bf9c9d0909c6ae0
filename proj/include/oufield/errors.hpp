#pragma once

#include <stdexcept>
#include <string>

namespace oufield {

/// Raised when an argument falls outside the declared domain of a kernel,
/// transform, or sampler.
class DomainError : public std::domain_error {
  public:
    explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

/// Raised when a covariance matrix cannot be factorized even at the largest
/// jitter of the schedule.
class NotPsdError : public std::runtime_error {
  public:
    NotPsdError(const std::string& what, std::size_t minor_index)
        : std::runtime_error(what), minor_index_(minor_index) {}

    /// Zero-based index of the leading minor that failed.
    std::size_t minor_index() const noexcept { return minor_index_; }

  private:
    std::size_t minor_index_;
};

}  // namespace oufield

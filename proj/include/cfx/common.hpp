#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace cfx {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Labels = std::vector<int>;
using IndexSet = std::vector<std::size_t>;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Input text that could not be parsed; carries the 1-based line number.
class MalformedInput : public Error {
  public:
    MalformedInput(const std::string& what, std::size_t line)
        : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
    std::size_t line() const noexcept { return line_; }

  private:
    std::size_t line_;
};

/// A feature cell that is not a number.
class NonNumericFeature : public MalformedInput {
  public:
    NonNumericFeature(const std::string& cell, std::size_t line, std::size_t column)
        : MalformedInput("non-numeric feature value '" + cell + "' in column " + std::to_string(column), line),
          column_(column) {}
    std::size_t column() const noexcept { return column_; }

  private:
    std::size_t column_;
};

class DimensionMismatch : public Error {
  public:
    using Error::Error;
};

class InvalidArgument : public Error {
  public:
    using Error::Error;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error {
  public:
    using Error::Error;
};

class IoError : public Error {
  public:
    using Error::Error;
};

/// Seeded 64-bit Mersenne Twister with portable draw helpers.
///
/// The standard distributions are implementation-defined, so uniform and
/// normal draws are derived from the raw engine output here to keep results
/// identical across standard libraries.
class Rng {
  public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next();
    /// Uniform in [0, 1).
    double uniform();
    /// Uniform integer in [0, n).
    std::size_t below(std::size_t n);
    double normal();

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

  private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Mixes a base seed with a stream identifier (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

namespace log {
void debug(const std::string& msg);
void info(const std::string& msg);
void warn(const std::string& msg);
void error(const std::string& msg);
}  // namespace log

}  // namespace cfx

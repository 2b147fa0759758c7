#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace edgeld {

// Reproducible random stream identified by (seed, stream_id).
//
// The engine is xoshiro256++ whose state is derived from a SplitMix64 hash of the
// pair, so replicas keyed by distinct stream ids are independent of one another and
// of the order in which workers run them. All variates are produced by code in this
// library (no std:: distributions) so sequences are identical across standard
// library implementations.
class RngStream
{
  public:
    using result_type = std::uint64_t;

    explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0);

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_id() const noexcept { return stream_id_; }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
    result_type operator()() noexcept;

    // Uniform on the open interval (0, 1).
    double uniform() noexcept;
    double normal() noexcept;
    // log of a Gamma(shape, 1) variate; stays finite for tiny shapes where the variate
    // itself underflows.
    double log_gamma_variate(double shape);
    double gamma(double shape);

  private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::array<std::uint64_t, 4> state_{};
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

// Stream id for replica `replica` of sweep point `point` inside experiment `tag`.
constexpr std::uint64_t replica_stream(std::uint64_t tag, std::uint64_t point, std::uint64_t replica)
{
    return (tag << 56) ^ (point << 36) ^ replica;
}

} // namespace edgeld

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>

namespace impulse_qvi {

/// Worker cap; honours IMPULSE_QVI_THREADS, defaults to the hardware count.
std::size_t worker_count();

/// Runs body(begin, end) over contiguous chunks of [0, n). Results written by
/// index are independent of the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

/// SplitMix64 finalizer; used to derive per-path seeds from a master seed.
std::uint64_t mix_seed(std::uint64_t master, std::uint64_t stream);

/// FNV-1a 64-bit over a byte string, rendered as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace impulse_qvi

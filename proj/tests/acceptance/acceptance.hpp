#pragma once

#include <chrono>
#include <cstdio>
#include <string>

#include "stcl/config.hpp"

namespace acceptance {

struct Verdict {
  bool pass = false;
  std::string detail;
};

Verdict gradients();
Verdict metric_oracles();
Verdict knee_curves();
Verdict manifests();
Verdict persistence();

struct EndToEnd {
  Verdict curriculum;
  Verdict convergence;
  Verdict detector;
};

/// Trains one teacher ladder, then STCL, baseline and convergence-only
/// students per seed until every majority is settled.
EndToEnd end_to_end(const stcl::RunConfig& config, std::size_t max_seeds);

inline double elapsed() {
  static const auto start = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

/// Progress goes to stderr so stdout carries only the verdict lines.
template <typename... Args>
void progress(const char* fmt, Args... args) {
  std::fprintf(stderr, "[%7.1fs] ", elapsed());
  std::fprintf(stderr, fmt, args...);
  std::fputc('\n', stderr);
  std::fflush(stderr);
}

std::string format(const char* fmt, ...) __attribute__((format(printf, 1, 2)));

}  // namespace acceptance

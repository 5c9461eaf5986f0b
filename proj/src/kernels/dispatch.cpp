// Copyright 2026 The proxforest Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include <atomic>
#include <cstdlib>
#include <string>

#include "proxforest/error.hpp"
#include "proxforest/kernels.hpp"

namespace proxforest::kernels {
namespace {

bool cpu_has(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(__x86_64__) || defined(_M_X64)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::neon:
#if defined(__aarch64__)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const KernelTable* best_available() {
  if (const char* env = std::getenv("PFGAP_SIMD")) {
    const std::string want(env);
    for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon}) {
      if (want == name(isa) && cpu_has(isa)) return &table(isa);
    }
  }
  if (cpu_has(Isa::avx2)) return &table(Isa::avx2);
  if (cpu_has(Isa::neon)) return &table(Isa::neon);
  return &detail::scalar_table();
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> c{best_available()};
  return c;
}

}  // namespace

bool available(Isa isa) { return cpu_has(isa); }

std::string_view name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
    case Isa::neon:
      return "neon";
  }
  return "unknown";
}

const KernelTable& table(Isa isa) {
  if (!cpu_has(isa)) throw ConfigError("kernel variant not available: " + std::string(name(isa)));
  switch (isa) {
#if defined(__x86_64__) || defined(_M_X64)
    case Isa::avx2:
      return detail::avx2_table();
#endif
#if defined(__aarch64__)
    case Isa::neon:
      return detail::neon_table();
#endif
    default:
      return detail::scalar_table();
  }
}

const KernelTable& active() { return *current().load(std::memory_order_relaxed); }

void select(Isa isa) { current().store(&table(isa), std::memory_order_relaxed); }

}  // namespace proxforest::kernels

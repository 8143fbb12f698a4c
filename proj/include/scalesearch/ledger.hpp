// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

namespace scalesearch {

/// Exact compute accounting for one run or one step of a run.
///
/// nfes counts generator forward passes, one per generated scale. Every cache
/// miss is exactly one forward pass, so nfes == cache_misses always holds.
/// images_verified counts complete sequences handed to the verifier roster
/// (once per image per selection round); verifier_calls counts individual
/// verifier invocations, so an ensemble scores one image with several calls.
struct BudgetLedger {
  std::uint64_t nfes = 0;
  std::uint64_t images_verified = 0;
  std::uint64_t verifier_calls = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t cache_misses = 0;

  void record_forward_pass();
  void record_cache_hit();
  void record_image(std::uint64_t calls);

  /// In-place fieldwise sum. Throws std::overflow_error if any counter wraps.
  BudgetLedger& operator+=(const BudgetLedger& other);

  friend bool operator==(const BudgetLedger&, const BudgetLedger&) = default;
};

BudgetLedger ledger_merge(const BudgetLedger& a, const BudgetLedger& b);

}  // namespace scalesearch

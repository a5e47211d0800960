// Binary persistence of NLI tensors.
//
// File layout (little-endian):
//   magic   8 bytes  "NLITENS\0"
//   version u32
//   key     32 bytes (SHA-256 provenance key)
//   kind    u8
//   c       i32
//   n_max   i32
//   count   u64
//   records count x { n:i32, k:i32, k':i32, re:f64, im:f64 }
// Writes go to a temporary file in the same directory followed by an atomic
// rename, so concurrent readers never observe a partial file.
#pragma once

#include <string>

#include "dpwdm/nli.hpp"

namespace dpwdm {

void cache_store(const NliTensor& tensor, const std::string& path);

/// Loads a tensor and verifies its provenance key. Throws on I/O errors,
/// malformed files, or key mismatch.
NliTensor cache_load(const std::string& path,
                     const std::array<std::uint8_t, 32>& expected_key);

/// Loads without key verification (for CSV dumps of arbitrary caches).
NliTensor cache_load_any(const std::string& path);

/// Writes the tensor as CSV rows "n,k,kprime,re,im" with a header line.
void dump_csv(const NliTensor& tensor, const std::string& path);

}  // namespace dpwdm

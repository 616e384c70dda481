#pragma once

#include <iosfwd>

#include "rpr/types.hpp"

namespace rpr {

// Draws m clean samples: a ~ N(0, I_n), y = (a'x*)^2 + z. Deterministic given
// the stream key recorded in the batch provenance.
Batch draw_clean(int m, const Signal& signal, const NoiseSpec& noise,
                 std::uint64_t stream_key, std::uint64_t seed = 0);

// Replaces exactly floor(epsilon * m) samples according to the adversary and
// shuffles the output order. Replaced samples carry corrupted = true. The
// replaced indices are the prefix of a seeded permutation, so corruption sets
// are nested across epsilon values at a fixed stream key.
Batch corrupt(const Batch& batch, const AdversarySpec& adversary,
              std::uint64_t stream_key);

// (a_j, y_j), (a_{m+j}, y_{m+j})  ->  b = (a_j + a_{m+j})/sqrt(2),
// c = (a_j - a_{m+j})/sqrt(2), upsilon = (y_j - y_{m+j})/2. A triple is
// flagged corrupted iff either parent was. Requires an even batch.
PairedBatch pair_transform(const Batch& batch);

// Debug dump, one sample per row: index, corrupted, y, a_0..a_{n-1}.
void dump_csv(const Batch& batch, std::ostream& os);

}  // namespace rpr

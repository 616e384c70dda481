#include "rpr/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace rpr {

Batch draw_clean(int m, const Signal& signal, const NoiseSpec& noise,
                 std::uint64_t stream_key, std::uint64_t seed) {
  if (m < 1) throw std::invalid_argument("draw_clean: m must be >= 1");
  signal.validate();
  noise.validate();

  RngStream rng(stream_key);
  const int n = signal.n();
  Batch batch;
  batch.provenance = {seed, stream_key};
  batch.samples.reserve(m);
  for (int j = 0; j < m; ++j) {
    Sample s;
    s.a = Vector(n);
    for (int i = 0; i < n; ++i) s.a[i] = rng.normal();
    double ax = s.a.dot(signal.x_star);
    s.y = ax * ax + noise.draw(rng);
    s.corrupted = false;
    batch.samples.push_back(std::move(s));
  }
  return batch;
}

Batch corrupt(const Batch& batch, const AdversarySpec& adversary,
              std::uint64_t stream_key) {
  if (batch.size() == 0) throw std::invalid_argument("corrupt: batch is empty");
  const int m = batch.size();
  const int n = batch.dim();
  adversary.validate(n);

  Batch out = batch;
  const int k = adversary.kind == AdversaryKind::none
                    ? 0
                    : static_cast<int>(std::floor(adversary.epsilon * m));
  RngStream rng(stream_key);

  if (k > 0) {
    std::vector<int> idx(m);
    std::iota(idx.begin(), idx.end(), 0);
    if (adversary.kind == AdversaryKind::sign_flip_largest) {
      // Inspects the clean batch: targets the k largest |y|.
      std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        double ya = std::abs(batch.samples[a].y);
        double yb = std::abs(batch.samples[b].y);
        return ya != yb ? ya > yb : a < b;
      });
    } else {
      rng.shuffle(idx);
    }
    for (int r = 0; r < k; ++r) {
      Sample& s = out.samples[idx[r]];
      switch (adversary.kind) {
        case AdversaryKind::response_spike:
          s.y = adversary.magnitude;
          break;
        case AdversaryKind::direction_plant:
          s.a = adversary.plant_scale * adversary.plant_direction;
          s.y = adversary.plant_scale * adversary.plant_scale;
          break;
        case AdversaryKind::sign_flip_largest:
          s.y = -s.y;
          break;
        case AdversaryKind::replace_iid: {
          for (int i = 0; i < n; ++i) s.a[i] = rng.normal();
          s.y = adversary.alt_noise.draw(rng);
          break;
        }
        case AdversaryKind::none:
          break;
      }
      s.corrupted = true;
    }
  }

  // Position must leak nothing.
  rng.shuffle(out.samples);
  return out;
}

PairedBatch pair_transform(const Batch& batch) {
  if (batch.size() % 2 != 0)
    throw std::invalid_argument("pair_transform: batch size must be even");
  const int m = batch.size() / 2;
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);

  PairedBatch out;
  out.provenance = batch.provenance;
  out.samples.reserve(m);
  for (int j = 0; j < m; ++j) {
    const Sample& s1 = batch.samples[j];
    const Sample& s2 = batch.samples[m + j];
    PairedSample p;
    p.b = (s1.a + s2.a) * inv_sqrt2;
    p.c = (s1.a - s2.a) * inv_sqrt2;
    p.upsilon = (s1.y - s2.y) / 2.0;
    p.corrupted = s1.corrupted || s2.corrupted;
    out.samples.push_back(std::move(p));
  }
  return out;
}

void dump_csv(const Batch& batch, std::ostream& os) {
  const int n = batch.dim();
  os << "index,corrupted,y";
  for (int i = 0; i < n; ++i) os << ",a_" << i;
  os << "\n";
  for (int j = 0; j < batch.size(); ++j) {
    const Sample& s = batch.samples[j];
    os << j << "," << (s.corrupted ? 1 : 0) << "," << s.y;
    for (int i = 0; i < n; ++i) os << "," << s.a[i];
    os << "\n";
  }
}

}  // namespace rpr

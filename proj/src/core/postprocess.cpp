#include "core/postprocess.hpp"

#include <algorithm>
#include <numeric>

namespace vsseg {

ComponentLabeling connected_components(const std::vector<std::uint8_t>& mask,
                                       const Dims& dims, int connectivity) {
  if (connectivity != 6 && connectivity != 26) {
    throw ParamError("connectivity must be 6 or 26");
  }
  if (static_cast<std::int64_t>(mask.size()) != voxel_count(dims)) {
    throw ShapeError("mask size does not match dims");
  }
  for (const auto v : mask) {
    if (v > 1) throw ValidationError("mask values must be 0 or 1");
  }

  const auto [nx, ny, nz] = dims;
  ComponentLabeling out;
  out.labels.assign(mask.size(), 0);

  std::vector<std::array<std::int64_t, 3>> offsets;
  for (std::int64_t dz = -1; dz <= 1; ++dz) {
    for (std::int64_t dy = -1; dy <= 1; ++dy) {
      for (std::int64_t dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0 && dz == 0) continue;
        if (connectivity == 6 && std::abs(dx) + std::abs(dy) + std::abs(dz) != 1) continue;
        offsets.push_back({dx, dy, dz});
      }
    }
  }

  struct Component {
    std::int64_t size;
    std::int64_t seed;  // smallest contained flat index (BFS seeds scan order)
    std::int32_t provisional;
  };
  std::vector<Component> comps;
  std::vector<std::int64_t> queue;

  std::int32_t next = 0;
  for (std::int64_t start = 0; start < static_cast<std::int64_t>(mask.size()); ++start) {
    if (mask[static_cast<std::size_t>(start)] == 0 ||
        out.labels[static_cast<std::size_t>(start)] != 0) {
      continue;
    }
    ++next;
    std::int64_t size = 0;
    queue.clear();
    queue.push_back(start);
    out.labels[static_cast<std::size_t>(start)] = next;
    while (!queue.empty()) {
      const std::int64_t idx = queue.back();
      queue.pop_back();
      ++size;
      const std::int64_t z = idx / (nx * ny);
      const std::int64_t y = (idx / nx) % ny;
      const std::int64_t x = idx % nx;
      for (const auto& o : offsets) {
        const std::int64_t xx = x + o[0], yy = y + o[1], zz = z + o[2];
        if (xx < 0 || xx >= nx || yy < 0 || yy >= ny || zz < 0 || zz >= nz) continue;
        const std::int64_t nidx = flat_index(dims, xx, yy, zz);
        if (mask[static_cast<std::size_t>(nidx)] == 1 &&
            out.labels[static_cast<std::size_t>(nidx)] == 0) {
          out.labels[static_cast<std::size_t>(nidx)] = next;
          queue.push_back(nidx);
        }
      }
    }
    comps.push_back({size, start, next});
  }

  // Relabel by (size desc, seed asc); the scan order makes `seed` the
  // smallest flat index in its component.
  std::vector<std::size_t> order(comps.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (comps[a].size != comps[b].size) return comps[a].size > comps[b].size;
    return comps[a].seed < comps[b].seed;
  });
  std::vector<std::int32_t> remap(comps.size() + 1, 0);
  out.sizes.resize(comps.size());
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    remap[static_cast<std::size_t>(comps[order[rank]].provisional)] =
        static_cast<std::int32_t>(rank + 1);
    out.sizes[rank] = comps[order[rank]].size;
  }
  for (auto& l : out.labels) {
    if (l != 0) l = remap[static_cast<std::size_t>(l)];
  }
  return out;
}

LabelVolume keep_largest_component(const LabelVolume& pred, int class_id) {
  if (class_id < 1 || class_id >= LabelVolume::kNumClasses) {
    throw ParamError("class id must be 1 or 2");
  }
  const auto c = static_cast<std::uint8_t>(class_id);
  std::vector<std::uint8_t> mask(pred.data().size());
  bool any = false;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    mask[i] = pred.data()[i] == c;
    any = any || mask[i];
  }
  if (!any) return pred;

  const ComponentLabeling cc = connected_components(mask, pred.dims(), 26);
  std::vector<std::uint8_t> out(pred.data());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (cc.labels[i] > 1) out[i] = 0;  // label 1 is the largest component
  }
  return LabelVolume(pred.dims(), pred.spacing(), std::move(out), pred.meta());
}

}  // namespace vsseg

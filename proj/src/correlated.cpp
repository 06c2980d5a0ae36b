// resid: incremental re-rendering with residual path integrals.
// SPDX-License-Identifier: Apache-2.0

#include "resid/correlated.h"

namespace resid {

RenderResult render_residual_correlated(const ScenePair &pair, const PathTracerConfig &cfg) {
    const Camera &cam = pair.camera();
    return render_pixels(cam.width(), cam.height(), cfg.spp, cfg.batches, cfg.threads,
                         [&](int pixel, Vec2 raster, int sample) {
                             Sampler s_new = pixel_sampler(cfg.seed, pixel, sample);
                             Sampler s_old = s_new;
                             Rgb a = trace_radiance(pair, FrameId::New, raster, cfg, s_new);
                             Rgb b = trace_radiance(pair, FrameId::Old, raster, cfg, s_old);
                             return a - b;
                         });
}

RenderResult render_residual_independent(const ScenePair &pair, const PathTracerConfig &cfg) {
    const Camera &cam = pair.camera();
    const uint64_t seed_old = mix64(cfg.seed ^ 0x6f6c64ull);
    return render_pixels(cam.width(), cam.height(), cfg.spp, cfg.batches, cfg.threads,
                         [&](int pixel, Vec2 raster, int sample) {
                             Sampler s_new = pixel_sampler(cfg.seed, pixel, sample);
                             Sampler s_old = pixel_sampler(seed_old, pixel, sample);
                             Rgb a = trace_radiance(pair, FrameId::New, raster, cfg, s_new);
                             Rgb b = trace_radiance(pair, FrameId::Old, raster, cfg, s_old);
                             return a - b;
                         });
}

} // namespace resid

// Minimal library use: occlude one view of the bandlimited scene, run the
// ray-domain consensus and compare the fit against a naive fit on all pixels.

#include <iostream>

#include "ranrac/ranrac.hpp"

int main() {
    using namespace ranrac;
    const SeedSpec seed{7, 0};

    SceneDataset scene = make_scene(SceneParams::bandlimited(), seed);
    ObservationView& view = scene.views.front();
    const auto mask = corrupt_view(view, CorruptionSpec{CorruptionKind::occlusion, 0.0, 10.0, 3,
                                                        OcclusionSpec::defaults_for(scene.space)},
                                   scene.space, substream(seed, StreamRole::occlusion));
    std::cout << "occluded pixels: " << mask->count() << " of " << mask->bits.size() << '\n';

    const LatentRidgeField field(*scene.fieldPrior);
    const auto samples = samples_from_view(view);

    RayDomainConfig cfg;
    cfg.hypothesisCount = 300;  // the default 2000 takes a few seconds longer
    cfg.seed = substream(seed, StreamRole::hypotheses);
    const auto report = run_ray_domain(std::span<const PixelSample>(samples), field, cfg);

    const auto& truth = scene.groundTruth.front();
    const auto ranracView = render_view(field, report.finalModel, view.pose, truth.width, truth.height, scene.space);
    const auto naiveView = render_view(field, field.fit(samples, FitStrength::full), view.pose, truth.width,
                                       truth.height, scene.space);
    std::cout << "best hypothesis " << report.best.index << " with " << report.best.score << " inliers\n"
              << "consensus size  " << report.consensusIds.size() << '\n'
              << "ranrac psnr     " << psnr(ranracView, truth, scene.space.span()) << " dB\n"
              << "naive psnr      " << psnr(naiveView, truth, scene.space.span()) << " dB\n";
}

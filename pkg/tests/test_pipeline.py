"""End-to-end orchestration: keyframe detection, tracking, compositing,
per-frame reporting, and the synthetic scene generator that supplies
ground truth for all of it.

Every expected value is constructed: scenes carry their exact quad
trajectories, so corner accuracy, purity outside the composited region,
and self-insertion can be checked against known geometry."""

import json

import numpy as np
import pytest

from adforge.compositor import Advert, BlendConfig
from adforge.detector import ChromaBaseline, HeatmapFiles, save_heatmap_pgm
from adforge.errors import NoBillboardFound, QuadOutOfBounds
from adforge.geometry import Quad, estimate_homography, project_points
from adforge.maskops import rasterize_quad
from adforge.pipeline import (
    STATUS_LOST,
    STATUS_PASSTHROUGH,
    STATUS_RENDERED,
    TERMINATION_COMPLETED,
    JobConfig,
    SceneSpec,
    default_scene_quad,
    detect_keyframe,
    drift_motions,
    generate_synthetic_scene,
    report_to_dict,
    run_job,
)


def _random_advert(seed=99, height=72, width=120):
    rng = np.random.default_rng(seed)
    return Advert(np.clip(rng.random((height, width, 3)), 0.05, 0.95))


def _chroma(spec):
    return ChromaBaseline(color=spec.billboard_color, sigma=0.2)


class TestGenerateSyntheticScene:
    def test_identity_motion_static(self):
        spec = SceneSpec(width=96, height=80, frame_count=4, seed=2)
        scene = generate_synthetic_scene(spec)
        assert len(scene.frames) == 4
        for frame in scene.frames[1:]:
            assert np.array_equal(frame, scene.frames[0])
        for quad in scene.quads[1:]:
            assert np.array_equal(np.asarray(quad.corners), np.asarray(scene.quads[0].corners))

    def test_translation_ground_truth(self):
        spec = SceneSpec(
            width=200,
            height=80,
            frame_count=30,
            seed=3,
            motions=drift_motions(30, dx=1.0),
        )
        scene = generate_synthetic_scene(spec)
        base = np.asarray(scene.quads[0].corners)
        for t, quad in enumerate(scene.quads):
            expected = base + np.array([float(t), 0.0])
            assert np.array_equal(np.asarray(quad.corners), expected)

    def test_seed_determinism(self):
        spec = SceneSpec(width=96, height=80, frame_count=3, seed=7)
        a = generate_synthetic_scene(spec)
        b = generate_synthetic_scene(spec)
        for fa, fb in zip(a.frames, b.frames):
            assert np.array_equal(fa, fb)
        for ha, hb in zip(a.heatmaps, b.heatmaps):
            assert np.array_equal(ha, hb)
        c = generate_synthetic_scene(SceneSpec(width=96, height=80, frame_count=3, seed=8))
        assert not np.array_equal(a.frames[0], c.frames[0])

    def test_heatmaps_are_rasterized_quads(self):
        spec = SceneSpec(
            width=128,
            height=96,
            frame_count=5,
            seed=4,
            motions=drift_motions(5, dx=1.5, dy=0.5),
        )
        scene = generate_synthetic_scene(spec)
        for quad, heat in zip(scene.quads, scene.heatmaps):
            mask = rasterize_quad(quad, spec.width, spec.height)
            assert np.array_equal(heat, np.where(mask, 0.95, 0.05))

    def test_quad_out_of_bounds(self):
        spec = SceneSpec(
            width=128,
            height=96,
            frame_count=30,
            seed=4,
            motions=drift_motions(30, dx=4.0),
        )
        with pytest.raises(QuadOutOfBounds):
            generate_synthetic_scene(spec)


class TestJobConfigValidation:
    def test_stride_must_be_positive(self, small_scene):
        _, scene = small_scene
        with pytest.raises(ValueError):
            JobConfig(frames=scene.frames, detector=ChromaBaseline(), stride=0)

    def test_cutoff_range(self, small_scene):
        _, scene = small_scene
        with pytest.raises(ValueError):
            JobConfig(frames=scene.frames, detector=ChromaBaseline(), recognition_cutoff=1.5)

    def test_needs_detection_source(self, small_scene):
        _, scene = small_scene
        with pytest.raises(ValueError):
            JobConfig(frames=scene.frames)


class TestDetectKeyframe:
    def test_visible_from_frame_zero(self, small_scene):
        spec, scene = small_scene
        cfg = JobConfig(frames=scene.frames, detector=_chroma(spec), stride=10)
        index, quad = detect_keyframe(cfg)
        assert index == 0
        err = np.abs(np.asarray(quad.corners) - np.asarray(scene.quads[0].corners)).max()
        assert err <= 1e-9

    def test_scheduled_heatmaps_keyframe_20(self, tmp_path):
        spec = SceneSpec(width=128, height=96, frame_count=30, seed=6)
        scene = generate_synthetic_scene(spec)
        # sampled frames 0 and 10 see a cold map; frame 20 sees the real one
        flat = np.full((96, 128), 0.05)
        save_heatmap_pgm(tmp_path / "heatmap_000000.pgm", flat)
        save_heatmap_pgm(tmp_path / "heatmap_000010.pgm", flat)
        save_heatmap_pgm(tmp_path / "heatmap_000020.pgm", scene.heatmaps[20])
        cfg = JobConfig(
            frames=scene.frames,
            detector=HeatmapFiles(directory=tmp_path),
            stride=10,
        )
        index, quad = detect_keyframe(cfg)
        assert index == 20
        err = np.abs(np.asarray(quad.corners) - np.asarray(scene.quads[20].corners)).max()
        assert err <= 1e-9

    def test_cold_everywhere_raises(self, tmp_path):
        spec = SceneSpec(width=128, height=96, frame_count=30, seed=6)
        scene = generate_synthetic_scene(spec)
        flat = np.full((96, 128), 0.05)
        for i in (0, 10, 20):
            save_heatmap_pgm(tmp_path / f"heatmap_{i:06d}.pgm", flat)
        cfg = JobConfig(
            frames=scene.frames,
            detector=HeatmapFiles(directory=tmp_path),
            stride=10,
        )
        with pytest.raises(NoBillboardFound):
            detect_keyframe(cfg)

    def test_detector_required(self, small_scene):
        _, scene = small_scene
        cfg = JobConfig(
            frames=scene.frames,
            corners_override=(0, scene.quads[0]),
        )
        with pytest.raises(ValueError):
            detect_keyframe(cfg)


def _outside_pure(out_frame, in_frame, corners, width, height):
    mask = rasterize_quad(Quad(corners), width, height)
    return np.array_equal(out_frame[~mask], in_frame[~mask])


class TestRunJob:
    def test_tracked_render_report_and_accuracy(self, small_scene):
        spec, scene = small_scene
        ad = _random_advert()
        cfg = JobConfig(frames=scene.frames, advert=ad, detector=_chroma(spec))
        result = run_job(cfg)
        report = result.report

        # report completeness: one entry per emitted frame, monotone,
        # statuses from the documented set
        assert len(result.frames) == len(scene.frames) == len(report.entries)
        assert [e.frame_index for e in report.entries] == list(range(len(scene.frames)))
        assert {e.status for e in report.entries} <= {
            STATUS_PASSTHROUGH,
            STATUS_RENDERED,
            STATUS_LOST,
        }
        assert report.termination == TERMINATION_COMPLETED
        assert report.keyframe_index == 0
        assert report.frames_rendered == len(scene.frames)

        # keyframe faithfulness: the homography estimated from the advert
        # rectangle lands its corners exactly on the confirmed quad
        kf_corners = np.asarray(report.entries[report.keyframe_index].corners)
        h_key = estimate_homography(ad.source_quad.corners, kf_corners)
        replayed = project_points(h_key, ad.source_quad.corners)
        assert np.abs(replayed - kf_corners).max() <= 1e-6

        for i, entry in enumerate(report.entries):
            assert entry.status == STATUS_RENDERED
            # tracked corners stay within the acceptance corner budget
            err = np.linalg.norm(
                np.asarray(entry.corners) - np.asarray(scene.quads[i].corners), axis=1
            )
            assert np.sqrt((err**2).mean()) <= 0.5
            assert entry.alive_features >= 8
            assert entry.blend_residual <= cfg.blend.solver_tolerance
            # everything outside the tracked quad is untouched input
            assert _outside_pure(
                result.frames[i], scene.frames[i], entry.corners, spec.width, spec.height
            )

    def test_static_override_stability(self):
        spec = SceneSpec(width=128, height=96, frame_count=12, seed=21)
        scene = generate_synthetic_scene(spec)
        ad = _random_advert(seed=22)
        cfg = JobConfig(
            frames=scene.frames,
            advert=ad,
            corners_override=(0, scene.quads[0]),
        )
        result = run_job(cfg)
        assert result.report.frames_rendered == 12
        ref = np.asarray(scene.quads[0].corners)
        for entry in result.report.entries:
            assert entry.status == STATUS_RENDERED
            assert np.abs(np.asarray(entry.corners) - ref).max() < 1e-6
        for prev, nxt in zip(result.frames, result.frames[1:]):
            assert np.abs(nxt - prev).max() <= cfg.blend.solver_tolerance

    def test_self_insertion_small(self, small_scene):
        spec, scene = small_scene
        cfg = JobConfig(
            frames=scene.frames,
            advert=scene.billboard,
            corners_override=(0, scene.quads[0]),
        )
        result = run_job(cfg)
        assert result.report.frames_rendered == len(scene.frames)
        bound = 2.0 / 255.0 + cfg.blend.solver_tolerance
        for out, src in zip(result.frames, scene.frames):
            assert np.abs(out - src).max() <= bound

    def test_tracking_lost_passthrough_tail(self):
        spec = SceneSpec(
            width=128,
            height=96,
            frame_count=8,
            seed=23,
            motions=drift_motions(8, dx=0.5),
        )
        scene = generate_synthetic_scene(spec)
        blank = np.full_like(scene.frames[0], 0.5)
        frames = list(scene.frames[:5]) + [blank] * 3
        cfg = JobConfig(
            frames=frames,
            advert=_random_advert(seed=24),
            corners_override=(0, scene.quads[0]),
        )
        result = run_job(cfg)
        report = result.report
        assert report.frames_rendered == 5
        assert report.termination.startswith("tracking lost at frame 5")
        assert [e.status for e in report.entries] == [STATUS_RENDERED] * 5 + [STATUS_LOST] * 3
        for i in range(5, 8):
            assert np.array_equal(result.frames[i], blank)

    def test_frames_before_keyframe_pass_through(self, small_scene):
        spec, scene = small_scene
        cfg = JobConfig(
            frames=scene.frames,
            advert=_random_advert(seed=25),
            corners_override=(5, scene.quads[5]),
        )
        result = run_job(cfg)
        report = result.report
        assert report.keyframe_index == 5
        assert report.frames_rendered == len(scene.frames) - 5
        for i in range(5):
            assert report.entries[i].status == STATUS_PASSTHROUGH
            assert np.array_equal(result.frames[i], scene.frames[i])
        assert all(e.status == STATUS_RENDERED for e in report.entries[5:])

    def test_determinism(self, small_scene):
        spec, scene = small_scene
        def go():
            cfg = JobConfig(
                frames=scene.frames, advert=_random_advert(seed=26), detector=_chroma(spec)
            )
            return run_job(cfg)

        a = go()
        b = go()
        for fa, fb in zip(a.frames, b.frames):
            assert np.array_equal(fa, fb)
        assert a.report == b.report

    def test_empty_video(self):
        cfg = JobConfig(frames=[], advert=_random_advert(), detector=ChromaBaseline())
        with pytest.raises(NoBillboardFound):
            run_job(cfg)

    def test_advert_required(self, small_scene):
        spec, scene = small_scene
        cfg = JobConfig(frames=scene.frames, detector=_chroma(spec))
        with pytest.raises(ValueError):
            run_job(cfg)

    def test_on_frame_callback_order(self, small_scene):
        spec, scene = small_scene
        seen = []
        cfg = JobConfig(
            frames=scene.frames, advert=_random_advert(seed=27), detector=_chroma(spec)
        )
        run_job(cfg, on_frame=lambda i, frame: seen.append(i))
        assert seen == list(range(len(scene.frames)))

    def test_report_serializes_to_json(self, small_scene):
        spec, scene = small_scene
        cfg = JobConfig(
            frames=scene.frames, advert=_random_advert(seed=28), detector=_chroma(spec)
        )
        result = run_job(cfg)
        payload = report_to_dict(result.report)
        text = json.dumps(payload)
        back = json.loads(text)
        assert back["keyframe_index"] == result.report.keyframe_index
        assert back["termination"] == TERMINATION_COMPLETED
        assert len(back["frames"]) == len(result.report.entries)
        assert back["frames"][0]["status"] in {
            STATUS_PASSTHROUGH,
            STATUS_RENDERED,
            STATUS_LOST,
        }

import numpy as np
import pytest

from rigidflow import frameio
from rigidflow.errors import DataError, FormatError
from rigidflow.frameio import FlowField, ImageGrid, InstanceMask, ScalarField
from rigidflow.geometry import CameraRig


def test_disparity_decode_rules(tmp_path):
    import cv2
    raw = np.array([[256, 0], [513, 65535]], dtype=np.uint16)
    path = tmp_path / "d.png"
    cv2.imwrite(str(path), raw)
    field = frameio.read_disparity_png(path)
    # devkit formula: disp = uint16 / 256, stored 0 means invalid
    assert field.values[0, 0] == 1.0
    assert not field.valid[0, 1]
    assert field.values[1, 0] == 513 / 256.0
    assert field.valid[1, 1]


def test_disparity_round_trip_exhaustive(tmp_path):
    raw = np.arange(65536, dtype=np.uint16).reshape(256, 256)
    src = tmp_path / "a.png"
    import cv2
    cv2.imwrite(str(src), raw)
    field = frameio.read_disparity_png(src)
    assert not field.valid[0, 0]
    assert field.valid[0, 1:].all()
    out = tmp_path / "b.png"
    frameio.write_disparity_png(field, out)
    again = frameio.read_disparity_png(out)
    np.testing.assert_array_equal(field.values, again.values)
    np.testing.assert_array_equal(field.valid, again.valid)
    # encoded payloads agree bit for bit
    np.testing.assert_array_equal(cv2.imread(str(out), cv2.IMREAD_UNCHANGED), raw)


def test_disparity_off_grid_rounds_to_nearest(tmp_path):
    vals = np.array([[1.0 + 0.4 / 256.0, 2.0 + 0.6 / 256.0]])
    field = ScalarField(vals, np.ones_like(vals, dtype=bool))
    path = tmp_path / "d.png"
    frameio.write_disparity_png(field, path)
    back = frameio.read_disparity_png(path)
    assert abs(back.values[0, 0] - vals[0, 0]) <= 1 / 512.0
    assert abs(back.values[0, 1] - vals[0, 1]) <= 1 / 512.0
    np.testing.assert_allclose(back.values[0, 0], 1.0, atol=1e-12)
    np.testing.assert_allclose(back.values[0, 1], 2.0 + 1 / 256.0, atol=1e-12)


def test_disparity_wrong_depth_rejected(tmp_path):
    import cv2
    path = tmp_path / "d8.png"
    cv2.imwrite(str(path), np.zeros((4, 4), dtype=np.uint8))
    with pytest.raises(FormatError):
        frameio.read_disparity_png(path)


def test_flow_decode_rules(tmp_path):
    import cv2
    enc = np.zeros((1, 3, 3), dtype=np.uint16)
    enc[0, 0] = [32768, 32768, 1]   # zero flow, valid
    enc[0, 1] = [32832, 32768, 1]   # u = 64/64 = 1.0
    enc[0, 2] = [40000, 123, 0]     # invalid regardless of u, v channels
    path = tmp_path / "f.png"
    cv2.imwrite(str(path), enc[:, :, ::-1])
    field = frameio.read_flow_png(path)
    assert field.u[0, 0] == 0.0 and field.v[0, 0] == 0.0 and field.valid[0, 0]
    assert field.u[0, 1] == 1.0
    assert not field.valid[0, 2]


def test_flow_round_trip_exhaustive(tmp_path):
    # every representable u value on the 1/64 grid, plus a spread of v values
    u16 = np.arange(65536, dtype=np.uint16).reshape(256, 256)
    v16 = np.flipud(u16).copy()
    u = (u16.astype(np.float64) - 2.0**15) / 64.0
    v = (v16.astype(np.float64) - 2.0**15) / 64.0
    field = FlowField(u, v, np.ones_like(u, dtype=bool))
    path = tmp_path / "f.png"
    frameio.write_flow_png(field, path)
    back = frameio.read_flow_png(path)
    np.testing.assert_array_equal(back.u, u)
    np.testing.assert_array_equal(back.v, v)
    assert back.valid.all()
    # a second write is a byte-level fixed point
    path2 = tmp_path / "f2.png"
    frameio.write_flow_png(back, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_flow_off_grid_rounds_to_nearest(tmp_path):
    u = np.array([[0.3 / 64.0 + 1.0]])
    v = np.array([[-2.0 - 0.45 / 64.0]])
    field = FlowField(u, v, np.ones((1, 1), dtype=bool))
    path = tmp_path / "f.png"
    frameio.write_flow_png(field, path)
    back = frameio.read_flow_png(path)
    assert abs(back.u[0, 0] - u[0, 0]) <= 1 / 128.0
    assert abs(back.v[0, 0] - v[0, 0]) <= 1 / 128.0


def test_instance_remap(tmp_path):
    import cv2
    raw = np.array([[0, 7], [9, 7]], dtype=np.uint8)
    path = tmp_path / "i.png"
    cv2.imwrite(str(path), raw)
    mask, mapping = frameio.read_instance_png(path)
    np.testing.assert_array_equal(mask.label, [[0, 1], [2, 1]])
    assert mapping == {0: 0, 7: 1, 9: 2}


def test_instance_all_zero(tmp_path):
    import cv2
    path = tmp_path / "i.png"
    cv2.imwrite(str(path), np.zeros((4, 4), dtype=np.uint16))
    mask, mapping = frameio.read_instance_png(path)
    assert mask.ids() == [0]
    assert mapping == {0: 0}


def test_instance_rejects_three_channels(tmp_path):
    import cv2
    path = tmp_path / "i.png"
    cv2.imwrite(str(path), np.zeros((4, 4, 3), dtype=np.uint8))
    with pytest.raises(FormatError):
        frameio.read_instance_png(path)


def test_image_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    img = ImageGrid(rng.integers(0, 256, size=(8, 6, 3)).astype(np.float64) / 255.0)
    path = tmp_path / "im.png"
    frameio.write_image_png(img, path)
    back = frameio.read_image_png(path)
    np.testing.assert_allclose(back.data, img.data, atol=1e-12)


def test_grayscale_conversion():
    img = ImageGrid(np.full((2, 2, 3), [1.0, 0.0, 0.0]))
    gray = img.grayscale()
    assert gray.channels == 1
    np.testing.assert_allclose(gray.data[..., 0], 0.299)


def test_calib_round_trip(tmp_path):
    rig = CameraRig(fx=240.0, fy=240.0, cx=160.0, cy=48.0, baseline=0.54, width=320, height=96)
    path = tmp_path / "c.txt"
    frameio.write_calib(rig, path)
    back = frameio.read_calib(path, 320, 96)
    assert back == rig


def test_motions_round_trip(tmp_path):
    from rigidflow.geometry import Twist
    motions = {0: Twist([0.1, -0.2, 0.3], [0.01, 0.02, -0.03]),
               2: Twist.zero()}
    path = tmp_path / "m.txt"
    frameio.write_motions(motions, path)
    back = frameio.read_motions(path)
    assert set(back) == {0, 2}
    np.testing.assert_array_equal(back[0].as_vector(), motions[0].as_vector())


def test_missing_file_names_path(tmp_path):
    with pytest.raises(DataError, match="nope"):
        frameio.read_disparity_png(tmp_path / "nope.png")


def test_frameset_dimension_mismatch():
    rig = CameraRig(fx=10.0, fy=10.0, cx=2.0, cy=2.0, baseline=0.5, width=4, height=4)
    ones4 = np.ones((4, 4))
    img = ImageGrid(np.ones((4, 4, 1)))
    small = ScalarField(np.ones((2, 2)), np.ones((2, 2), dtype=bool))
    good = ScalarField(ones4, np.ones((4, 4), dtype=bool))
    flow = FlowField(ones4 * 0, ones4 * 0, np.ones((4, 4), dtype=bool))
    seg = InstanceMask(np.zeros((4, 4), dtype=np.int64))
    with pytest.raises(DataError, match="disp0"):
        frameio.FrameSet(left0=img, right0=img, left1=img, right1=img,
                         disp0=small, disp1=good, flow_left=flow, seg=seg, rig=rig)

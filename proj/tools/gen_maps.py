"""Writes the desk-scale maps: 8 x 8 m, 0.1 m cells, border wall plus box obstacles."""
import pathlib
import random

RES = 0.1
N = 80


def render(boxes):
    grid = [["." for _ in range(N)] for _ in range(N)]
    for i in range(N):
        for row, col in ((0, i), (N - 1, i), (i, 0), (i, N - 1)):
            grid[row][col] = "#"
    for x0, y0, x1, y1 in boxes:
        for cy in range(N):
            for cx in range(N):
                x, y = (cx + 0.5) * RES, (cy + 0.5) * RES
                if x0 <= x <= x1 and y0 <= y <= y1:
                    grid[cy][cx] = "#"
    lines = [f"resolution {RES}", f"width {N}", f"height {N}"]
    lines += ["".join(grid[cy]) for cy in reversed(range(N))]
    return "\n".join(lines) + "\n"


def random_boxes(seed, count):
    rng = random.Random(seed)
    boxes = []
    while len(boxes) < count:
        w, h = rng.uniform(0.4, 1.2), rng.uniform(0.4, 1.2)
        x0, y0 = rng.uniform(0.6, 7.4 - w), rng.uniform(0.6, 7.4 - h)
        cand = (x0, y0, x0 + w, y0 + h)
        # keep at least 0.7 m of clearance between boxes
        if all(cand[0] > b[2] + 0.7 or cand[2] < b[0] - 0.7 or cand[1] > b[3] + 0.7 or cand[3] < b[1] - 0.7
               for b in boxes):
            boxes.append(cand)
    return boxes


if __name__ == "__main__":
    out = pathlib.Path(__file__).resolve().parent.parent / "maps"
    out.mkdir(exist_ok=True)
    (out / "desk_train_a.map").write_text(render(random_boxes(11, 8)))
    (out / "desk_train_b.map").write_text(render(random_boxes(23, 7)))
    (out / "desk_test.map").write_text(render(random_boxes(47, 9)))
    (out / "desk_empty.map").write_text(render([]))

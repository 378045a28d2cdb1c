"""Legacy VTK (ASCII) writers for meshes, nodal fields and dual boxes."""
import numpy as np

TRIANGLE = 5
POLYGON = 7


def _open(path_or_file):
    if hasattr(path_or_file, "write"):
        return path_or_file, False
    return open(path_or_file, "w"), True


def write_vtk(path_or_file, points, cells, cell_type, point_data=None, cell_data=None,
              title="boxtherm"):
    fh, close = _open(path_or_file)
    try:
        fh.write("# vtk DataFile Version 2.0\n")
        fh.write(f"{title}\nASCII\nDATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {len(points)} double\n")
        for x, y in np.asarray(points, dtype=float).tolist():
            fh.write(f"{x!r} {y!r} 0.0\n")
        size = sum(len(c) + 1 for c in cells)
        fh.write(f"CELLS {len(cells)} {size}\n")
        for c in cells:
            fh.write(" ".join(str(int(i)) for i in [len(c), *c]) + "\n")
        fh.write(f"CELL_TYPES {len(cells)}\n")
        fh.write("".join(f"{cell_type}\n" for _ in cells))
        for header, data in (("POINT_DATA", point_data), ("CELL_DATA", cell_data)):
            if not data:
                continue
            n = len(points) if header == "POINT_DATA" else len(cells)
            fh.write(f"{header} {n}\n")
            for name, vals in data.items():
                fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
                fh.write("".join(f"{v!r}\n" for v in np.asarray(vals, float).tolist()))
    finally:
        if close:
            fh.close()


def write_field(path_or_file, mesh, values, name="u", title="boxtherm"):
    write_vtk(path_or_file, mesh.vertices, mesh.triangles.tolist(), TRIANGLE,
              point_data={name: values}, title=title)


def write_boxes(path_or_file, dual):
    """One closed polygon per box with its area as cell data."""
    points, cells = [], []
    for p in range(dual.mesh.n_vertices):
        poly = dual.box_polygon(p)
        cells.append(list(range(len(points), len(points) + len(poly))))
        points.extend(poly.tolist())
    write_vtk(path_or_file, np.asarray(points), cells, POLYGON,
              cell_data={"box_area": dual.box_area, "vertex": np.arange(dual.mesh.n_vertices)},
              title="boxtherm dual boxes")

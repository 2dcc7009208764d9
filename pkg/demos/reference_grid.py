"""
Edit distances across a cost grid
=================================

Six-unit glucose chains are compared against a plain path while the
insertion/deletion and substitution costs vary. Label distances are fixed
(Glc-Xyl 0.684, Glc-Fuc 0.742) so every cell has a closed form.
"""

from macrosim import testlib
from macrosim.ged import EditCostConfig, ged_exact

family = testlib.reference_family()
nodes = testlib.reference_node_matrix()
edges = testlib.reference_edge_matrix()
base = family["L"]

# header: one column per (c_indel, c_sub) cell
print("row".ljust(16) + "".join(f"{ci:>3}/{cs:<3}" for ci, cs in testlib.GRID_CELLS))

for row in testlib.ROWS:
    cells = []
    for ci, cs in testlib.GRID_CELLS:
        d, _ = ged_exact(base, family[row], EditCostConfig(ci, cs, cs), nodes.distance, edges.distance)
        cells.append(d)
    print(row.ljust(16) + "".join(f"{d:7.2f}" for d in cells))

# A single relabel is either substituted or the node is deleted and
# re-inserted with its two edges, whichever is cheaper.
d, path = ged_exact(base, family["L-glc-xyl"], EditCostConfig(1, 10, 10), nodes.distance, edges.distance)
print("\nL -> L-glc-xyl at c_indel=1, c_sub=10:", d)
print("witness:", path.to_json())

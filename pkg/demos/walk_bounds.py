"""Compare the exact cycle-walk distance with its Fourier bounds."""

from obfx.analysis import sandwich_rows, walk_bound_report

rep = walk_bound_report(16, 4)
print("k=16 M=4 exact", rep.exact_value, "closed form", rep.bound_value, "holds", rep.satisfied)

for row in sandwich_rows(M_values=(2, 4), k_max=1 << 9, points=4):
    print(
        f"k={row.k:5d} M={row.M:2d} exact={float(row.exact):.3e} "
        f"cosine_sum={float(row.cosine_sum):.3e} closed_form={float(row.closed_form):.3e}"
    )

"""Mesh-refinement study: observed orders for smooth and rough solutions.

With p = 6 the solution is smooth and P1 elements converge at about h^2.
With p = 0 it is the indicator of the disk, which jumps at the boundary;
the rate drops well below that (the boundary penalty cannot be consistent
with a jump, which leaves a boundary layer).  The same tables come from the
command line:

    fracldg converge --s 0.4,0.6 --levels 0,1,2 --out smooth.csv
"""
from fracldg import StudyConfig, run_convergence

smooth = run_convergence(StudyConfig(s_values=(0.4, 0.6), levels=(0, 1, 2), p=6.0))
print("p = 6, k = 1")
print(smooth.table())

rough = run_convergence(StudyConfig(s_values=(0.5,), levels=(0, 1, 2), p=0.0))
print("\np = 0, k = 1")
print(rough.table())
print("\nCSV:")
print(smooth.to_csv())

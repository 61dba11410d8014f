//! P1 stiffness and mass matrices with piecewise-constant coefficients.

use num_complex::Complex64;

use super::mesh::Mesh1D;
use super::sparse::SparseSym;
use super::SolverError;

fn check_finite(name: &'static str, vals: &[Complex64]) -> Result<(), SolverError> {
    match vals.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
        Some(cell) => Err(SolverError::Assembly { field: name, cell }),
        None => Ok(()),
    }
}

/// `∫ a u' v'` on interior DOFs; `a` holds one value per cell.
pub fn stiffness(mesh: &Mesh1D, a: &[Complex64]) -> SparseSym {
    let h = mesh.widths();
    let n = mesh.dofs();
    let diag: Vec<Complex64> = (0..n).map(|i| a[i] / h[i] + a[i + 1] / h[i + 1]).collect();
    let off: Vec<Complex64> = (0..n.saturating_sub(1)).map(|i| -a[i + 1] / h[i + 1]).collect();
    SparseSym::from_symmetric_tridiagonal(&diag, &off)
}

/// `∫ c u v` on interior DOFs; `c` holds one value per cell.
pub fn mass(mesh: &Mesh1D, c: &[Complex64]) -> SparseSym {
    let h = mesh.widths();
    let n = mesh.dofs();
    let diag: Vec<Complex64> = (0..n).map(|i| (c[i] * h[i] + c[i + 1] * h[i + 1]) / 3.0).collect();
    let off: Vec<Complex64> = (0..n.saturating_sub(1)).map(|i| c[i + 1] * h[i + 1] / 6.0).collect();
    SparseSym::from_symmetric_tridiagonal(&diag, &off)
}

pub fn unit_mass(mesh: &Mesh1D) -> SparseSym {
    mass(mesh, &vec![Complex64::new(1.0, 0.0); mesh.n_cells()])
}

/// Stiffness of the unit coefficient; defines the `H¹₀` seminorm.
pub fn unit_stiffness(mesh: &Mesh1D) -> SparseSym {
    stiffness(mesh, &vec![Complex64::new(1.0, 0.0); mesh.n_cells()])
}

/// `K = stiffness(A) + mass(B)`, `M = mass(C)` from cell-midpoint values.
pub fn assemble(
    mesh: &Mesh1D,
    a_vals: &[Complex64],
    b_vals: &[Complex64],
    c_vals: &[Complex64],
) -> Result<(SparseSym, SparseSym), SolverError> {
    let cells = mesh.n_cells();
    for (name, v) in [("A", a_vals), ("B", b_vals), ("C", c_vals)] {
        if v.len() != cells {
            return Err(SolverError::Domain(format!("{name} has {} values for {cells} cells", v.len())));
        }
        check_finite(name, v)?;
    }
    let k = stiffness(mesh, a_vals).axpy(Complex64::new(1.0, 0.0), &mass(mesh, b_vals));
    Ok((k, mass(mesh, c_vals)))
}

/// Cell averages of a P1 function given by interior values (zero at the ends).
pub fn midpoint_values(u: &[Complex64]) -> Vec<Complex64> {
    let n = u.len();
    (0..=n)
        .map(|e| {
            let left = if e == 0 { Complex64::default() } else { u[e - 1] };
            let right = if e == n { Complex64::default() } else { u[e] };
            0.5 * (left + right)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn consts(v: f64, n: usize) -> Vec<Complex64> {
        vec![Complex64::new(v, 0.0); n]
    }

    #[test]
    fn textbook_p1_matrices() {
        let mesh = Mesh1D::uniform(8).unwrap();
        let h = 1.0 / 8.0;
        let (k, m) = assemble(&mesh, &consts(1.0, 8), &consts(0.0, 8), &consts(1.0, 8)).unwrap();
        for i in 0..7 {
            assert!((k.get(i, i).re - 2.0 / h).abs() < 1e-12);
            assert!((m.get(i, i).re - 4.0 * h / 6.0).abs() < 1e-15);
            if i + 1 < 7 {
                assert!((k.get(i, i + 1).re + 1.0 / h).abs() < 1e-12);
                assert!((m.get(i, i + 1).re - h / 6.0).abs() < 1e-15);
            }
        }
        assert_eq!(k.asymmetry(), 0.0);
    }

    #[test]
    fn potential_enters_linearly() {
        let mesh = Mesh1D::uniform(10).unwrap();
        let (k0, _) = assemble(&mesh, &consts(1.0, 10), &consts(0.0, 10), &consts(1.0, 10)).unwrap();
        let (k3, m1) = assemble(&mesh, &consts(1.0, 10), &consts(3.0, 10), &consts(1.0, 10)).unwrap();
        for ((a, b), m) in k3.values.iter().zip(&k0.values).zip(&m1.values) {
            assert!((a - b - 3.0 * m).norm() < 1e-13);
        }
    }

    #[test]
    fn complex_coefficient_gives_complex_symmetric() {
        let mesh = Mesh1D::uniform(3).unwrap();
        let a = vec![Complex64::new(1.0, 0.1); 3];
        let (k, _) = assemble(&mesh, &a, &consts(0.0, 3), &consts(1.0, 3)).unwrap();
        // oracle on 3 cells, h = 1/3: diag 2(1+0.1i)/h, off -(1+0.1i)/h
        assert!((k.get(0, 0) - Complex64::new(6.0, 0.6)).norm() < 1e-13);
        assert!((k.get(0, 1) - Complex64::new(-3.0, -0.3)).norm() < 1e-13);
        assert_eq!(k.get(0, 1), k.get(1, 0));
        assert!(k.get(0, 1) != k.get(1, 0).conj());
    }

    #[test]
    fn non_finite_rejected() {
        let mesh = Mesh1D::uniform(4).unwrap();
        let mut b = consts(0.0, 4);
        b[2] = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(
            assemble(&mesh, &consts(1.0, 4), &b, &consts(1.0, 4)),
            Err(SolverError::Assembly { field: "B", cell: 2 })
        ));
    }
}

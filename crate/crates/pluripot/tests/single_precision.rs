//! The single-precision instantiation agrees with double precision.

use pluripot::calculus::density::{integrate, ma_density};
use pluripot::scenarios::{ScenarioKind, ScenarioParams};
use pluripot::volume::binomial_identity_check;
use pluripot::{Form11Field32, Matrix32, Matrix64, Potential32, Potential64, Scenario32, Scenario64};

#[test]
fn discriminant_and_determinant_match_in_f32() {
    let a32 = Matrix32::diag(&[1.5, 2.0, 0.5]).unwrap();
    let a64 = Matrix64::diag(&[1.5, 2.0, 0.5]).unwrap();
    assert!((a32.det() as f64 - a64.det()).abs() < 1e-6);
    assert!((a32.adjugate().trace() as f64 - a64.adjugate().trace()).abs() < 1e-5);
}

#[test]
fn guan_li_mass_is_constant_in_f32() {
    let params = ScenarioParams::new(2, 16).seed(7);
    let s32 = Scenario32::build(ScenarioKind::GuanLiClosed, params.clone()).unwrap();
    let s64 = Scenario64::build(ScenarioKind::GuanLiClosed, params).unwrap();
    let u32_: Potential32 = s32.sample_psh(1, 7, 2).unwrap().remove(0).u;
    let u64_: Potential64 = s64.sample_psh(1, 7, 2).unwrap().remove(0).u;
    let m32 = integrate(&ma_density(&s32.omega, &u32_).unwrap()) as f64;
    let m64 = integrate(&ma_density(&s64.omega, &u64_).unwrap());
    let v64 = integrate(&ma_density(&s64.omega, &Potential64::constant(&s64.grid, 0.0)).unwrap());
    assert!((m64 - v64).abs() < 1e-10 * v64);
    assert!((m32 - v64).abs() < 1e-4 * v64);
    assert!(binomial_identity_check(&s32.omega, &u32_).unwrap() < 1e-3);
}

#[test]
fn constant_forms_in_f32() {
    let s = Scenario32::build(ScenarioKind::FlatKahler, ScenarioParams::new(1, 16)).unwrap();
    let omega = Form11Field32::constant(&s.grid, Matrix32::identity(1).unwrap()).unwrap();
    assert_eq!(omega.min_eigenvalue().0, 1.0);
}

use std::ffi::CStr;
use std::ptr;

use fraclap_ffi::*;

unsafe fn square(m: u64) -> *mut FlGrid {
    let (lo, hi) = ([0.0; 2], [1.0; 2]);
    let mut g = ptr::null_mut();
    assert_eq!(fl_grid_new(2, m, lo.as_ptr(), hi.as_ptr(), &mut g), FlStatus::Ok);
    g
}

fn last_error() -> String {
    let p = fl_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn solve_round_trip() {
    unsafe {
        let g = square(31);
        let n = fl_grid_n_active(g);
        assert_eq!(n, 31 * 31);
        assert!((fl_grid_spacing(g) - 1.0 / 32.0).abs() < 1e-15);

        let mut op = ptr::null_mut();
        assert_eq!(fl_operator_new(g, 1.5, &mut op), FlStatus::Ok);
        let mut pc = ptr::null_mut();
        assert_eq!(fl_precond_new_elliptic(op, &mut pc), FlStatus::Ok);

        let u: Vec<f64> = (0..n).map(|k| ((k % 17) as f64).sin()).collect();
        let mut b = vec![0.0; n as usize];
        assert_eq!(fl_operator_apply(op, u.as_ptr(), b.as_mut_ptr(), n), FlStatus::Ok);

        let mut x = vec![0.0; n as usize];
        let mut info = FlSolveInfo { iterations: 0, converged: false, relative_residual: 0.0, wall_time: 0.0 };
        assert_eq!(fl_solve(op, pc, b.as_ptr(), x.as_mut_ptr(), n, 1e-12, 0, &mut info), FlStatus::Ok);
        assert!(info.converged && info.iterations > 0 && info.relative_residual <= 1e-12);
        let err: f64 = x.iter().zip(&u).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
            / u.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!(err < 1e-9);

        // unpreconditioned solve hitting the cap still fills x and info
        let mut y = vec![0.0; n as usize];
        assert_eq!(
            fl_solve(op, ptr::null(), b.as_ptr(), y.as_mut_ptr(), n, 1e-14, 3, &mut info),
            FlStatus::NotConverged
        );
        assert_eq!(info.iterations, 3);
        assert!(!info.converged);
        assert!(y.iter().any(|&v| v != 0.0));
        assert!(last_error().contains("3 iterations"));

        fl_precond_free(pc);
        fl_operator_free(op);
        fl_grid_free(g);
    }
}

#[test]
fn constants_and_preconditioner() {
    unsafe {
        let g = square(63);
        let mut c = FlConstants { alpha: 0.0, d: 0, h: 0.0, delta: 0.0, c: 0.0, a1: 0.0, a2: 0.0, a3: 0.0 };
        assert_eq!(fl_constants(g, 1.25, &mut c), FlStatus::Ok);
        assert_eq!(c.d, 2);
        assert!((c.delta - 20.0 * c.h).abs() < 1e-14);
        assert!(c.a2 + c.a3 < 0.0);

        let mut pc = ptr::null_mut();
        assert_eq!(fl_precond_new(g, 1.0, 0.5, 2, &mut pc), FlStatus::Ok);
        let n = fl_grid_n_active(g) as usize;
        let r = vec![1.0; n];
        let mut z = vec![0.0; n];
        assert_eq!(fl_precond_apply(pc, r.as_ptr(), z.as_mut_ptr(), n as u64), FlStatus::Ok);
        assert!(z.iter().all(|&v| v > 0.0 && v < 1.0));
        fl_precond_free(pc);

        assert_eq!(fl_precond_new(g, 1.0, 0.5, 9, &mut pc), FlStatus::InvalidArgument);
        fl_grid_free(g);
    }
}

#[test]
fn crank_nicolson_decays() {
    unsafe {
        let mut g = ptr::null_mut();
        assert_eq!(fl_grid_l_shape(31, &mut g), FlStatus::Ok);
        let n = fl_grid_n_active(g);
        let mut op = ptr::null_mut();
        assert_eq!(fl_operator_new(g, 1.0, &mut op), FlStatus::Ok);
        let mut pc = ptr::null_mut();
        assert_eq!(fl_precond_new_time_step(op, 0.01, &mut pc), FlStatus::Ok);
        let mut u = vec![1.0; n as usize];
        let mut prev = (n as f64).sqrt();
        for _ in 0..5 {
            let st = fl_cn_step(op, pc, u.as_mut_ptr(), ptr::null(), ptr::null(), n, 0.01, 1e-12, ptr::null_mut());
            assert_eq!(st, FlStatus::Ok);
            let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(norm < prev);
            prev = norm;
        }
        fl_precond_free(pc);
        fl_operator_free(op);
        fl_grid_free(g);
    }
}

#[test]
fn null_and_size_errors() {
    unsafe {
        let mut op = ptr::null_mut();
        assert_eq!(fl_operator_new(ptr::null(), 1.0, &mut op), FlStatus::NullPointer);
        assert!(op.is_null());
        assert!(last_error().contains("grid"));

        let g = square(7);
        assert_eq!(fl_operator_new(g, 2.5, &mut op), FlStatus::InvalidArgument);
        assert_eq!(fl_operator_new(g, 1.0, &mut op), FlStatus::Ok);
        let x = [0.0; 10];
        let mut y = vec![0.0; 10];
        assert_eq!(fl_operator_apply(op, x.as_ptr(), y.as_mut_ptr(), 10), FlStatus::Dimension);
        assert_eq!(fl_operator_apply(op, ptr::null(), y.as_mut_ptr(), 49), FlStatus::NullPointer);

        let mut bad = ptr::null_mut();
        let lo = [0.0];
        assert_eq!(fl_grid_new(1, 7, lo.as_ptr(), ptr::null(), &mut bad), FlStatus::NullPointer);
        let hi = [1.0];
        let (lo5, hi5) = ([0.0; 5], [1.0; 5]);
        assert_eq!(fl_grid_new(5, 7, lo5.as_ptr(), hi5.as_ptr(), &mut bad), FlStatus::InvalidArgument);
        assert_eq!(fl_grid_new(1, 7, hi.as_ptr(), lo.as_ptr(), &mut bad), FlStatus::InvalidArgument);
        assert!(bad.is_null());
        assert_eq!(fl_grid_n_active(ptr::null()), 0);
        fl_grid_free(ptr::null_mut());
        fl_operator_free(op);
        fl_grid_free(g);
    }
}

#[test]
fn error_copy_truncates() {
    unsafe {
        let mut g = ptr::null_mut();
        assert_ne!(fl_grid_l_shape(0, &mut g), FlStatus::Ok);
        let full = last_error();
        let mut buf = [0i8; 8];
        let len = fl_last_error_copy(buf.as_mut_ptr().cast(), buf.len() as u64);
        assert_eq!(len as usize, full.len());
        let short = CStr::from_ptr(buf.as_ptr().cast()).to_str().unwrap();
        assert_eq!(short, &full[..7]);
        assert!(!CStr::from_ptr(fl_version()).to_str().unwrap().is_empty());
    }
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/fraclap.h")).unwrap();
    for name in ["fl_grid_new", "fl_operator_apply", "fl_solve", "fl_cn_step", "FL_STATUS_NOT_CONVERGED", "FlSolveInfo"] {
        assert!(header.contains(name), "{name} missing");
    }
}

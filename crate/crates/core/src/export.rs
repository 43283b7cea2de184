//! CSV artifacts. Numbers are written with 17 significant digits and every
//! file goes through a temporary file in the target directory, so a failed
//! run never leaves a partial artifact behind.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use crate::equilibrium::FeedbackStrategy;
use crate::error::{Error, Result};
use crate::model::Player;
use crate::riccati::RiccatiTrajectory;
use crate::sim::PathSample;
use crate::verify::VerificationCell;

/// Writes `contents` to `path` by persisting a temporary sibling file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn num(out: &mut String, v: f64) {
    write!(out, ",{v:.16e}").expect("writing to a String");
}

fn matrix_columns(out: &mut String, prefix: &str, rows: usize, cols: usize) {
    for i in 1..=rows {
        for j in 1..=cols {
            write!(out, ",{prefix}_{i}{j}").expect("writing to a String");
        }
    }
}

fn matrix_values(out: &mut String, m: &DMatrix<f64>) {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            num(out, m[(i, j)]);
        }
    }
}

fn vector_columns(out: &mut String, prefix: &str, len: usize) {
    for i in 1..=len {
        write!(out, ",{prefix}_{i}").expect("writing to a String");
    }
}

fn finish_row(out: &mut String, first: f64) -> String {
    let mut row = format!("{first:.16e}");
    row.push_str(out);
    row.push('\n');
    out.clear();
    row
}

/// `s,P1_11..P1_nn,P2_11..P2_nn,margin_follower,margin_leader`, one row per
/// node.
pub fn trajectory_csv(traj: &RiccatiTrajectory) -> String {
    let n = traj.p1[0].nrows();
    let mut header = String::from("s");
    matrix_columns(&mut header, "P1", n, n);
    matrix_columns(&mut header, "P2", n, n);
    header.push_str(",margin_follower,margin_leader\n");
    let mut out = header;
    let mut cells = String::new();
    for k in 0..traj.grid.len() {
        matrix_values(&mut cells, &traj.p1[k]);
        matrix_values(&mut cells, &traj.p2[k]);
        num(&mut cells, traj.margins[k].follower);
        num(&mut cells, traj.margins[k].leader);
        out.push_str(&finish_row(&mut cells, traj.grid[k]));
    }
    out
}

/// `s,Ku_..,Kvx_..,Kvu_..` on the strategies' grid.
pub fn gains_csv(leader: &FeedbackStrategy, follower: &FeedbackStrategy) -> Result<String> {
    if leader.player != Player::Leader || follower.player != Player::Follower || leader.grid != follower.grid {
        return Err(Error::Config("gain export needs a leader and a follower on one grid".into()));
    }
    let ku = &leader.state_gain[0];
    let kvx = &follower.state_gain[0];
    let kvu = &follower.control_gain[0];
    let mut out = String::from("s");
    matrix_columns(&mut out, "Ku", ku.nrows(), ku.ncols());
    matrix_columns(&mut out, "Kvx", kvx.nrows(), kvx.ncols());
    matrix_columns(&mut out, "Kvu", kvu.nrows(), kvu.ncols());
    out.push('\n');
    let mut cells = String::new();
    for (k, &s) in leader.grid.iter().enumerate() {
        matrix_values(&mut cells, &leader.state_gain[k]);
        matrix_values(&mut cells, &follower.state_gain[k]);
        matrix_values(&mut cells, &follower.control_gain[k]);
        out.push_str(&finish_row(&mut cells, s));
    }
    Ok(out)
}

/// Kernels against reversed time `r = T - s`, ascending in `r`.
pub fn plot_csv(traj: &RiccatiTrajectory) -> String {
    let n = traj.p1[0].nrows();
    let mut out = String::from("r");
    matrix_columns(&mut out, "P1", n, n);
    matrix_columns(&mut out, "P2", n, n);
    out.push('\n');
    let t_end = traj.t_end();
    let mut cells = String::new();
    for k in (0..traj.grid.len()).rev() {
        matrix_values(&mut cells, &traj.p1[k]);
        matrix_values(&mut cells, &traj.p2[k]);
        out.push_str(&finish_row(&mut cells, t_end - traj.grid[k]));
    }
    out
}

/// `path_id,s,x_1..x_n,u_1..u_m1,v_1..v_m2`.
pub fn paths_csv(samples: &[PathSample], n: usize, m1: usize, m2: usize) -> String {
    let mut out = String::from("path_id,s");
    vector_columns(&mut out, "x", n);
    vector_columns(&mut out, "u", m1);
    vector_columns(&mut out, "v", m2);
    out.push('\n');
    for p in samples {
        write!(out, "{},{:.16e}", p.path, p.s).expect("writing to a String");
        let mut cells = String::new();
        for &v in p.x.iter().chain(&p.u).chain(&p.v) {
            num(&mut cells, v);
        }
        out.push_str(&cells);
        out.push('\n');
    }
    out
}

/// `target,kind,eps,deltaJ,stderr,pass`.
pub fn verification_csv(cells: &[VerificationCell]) -> String {
    let mut out = String::from("target,kind,eps,deltaJ,stderr,pass\n");
    for c in cells {
        writeln!(
            out,
            "{},{},{:.16e},{:.16e},{:.16e},{}",
            c.target.name(),
            c.kind.as_str(),
            c.eps,
            c.delta_j,
            c.stderr,
            c.pass
        )
        .expect("writing to a String");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks;
    use crate::equilibrium::build_strategies;
    use crate::riccati::{solve_backward, CaseTag, Method};

    #[test]
    fn trajectory_layout() {
        let game = benchmarks::reference_game();
        let traj = solve_backward(&game, CaseTag::Case1General, 10, Method::Rk4).unwrap();
        let csv = trajectory_csv(&traj);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "s,P1_11,P2_11,margin_follower,margin_leader");
        assert_eq!(lines.len(), 12);
        let last: Vec<f64> = lines[11].split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(last, vec![1.0, 1.0, 2.0, 1.0, traj.margins[10].leader]);
    }

    #[test]
    fn gains_and_plot_layout() {
        let game = benchmarks::case2_tanh();
        let traj = solve_backward(&game, CaseTag::Case2, 10, Method::Rk4).unwrap();
        let (l, f) = build_strategies(&traj, &game, CaseTag::Case2).unwrap();
        let gains = gains_csv(&l, &f).unwrap();
        assert!(gains.starts_with("s,Ku_11,Kvx_11,Kvu_11\n"));
        assert!(gains_csv(&f, &l).is_err());
        let plot = plot_csv(&traj);
        let second = plot.lines().nth(1).unwrap();
        assert!(second.starts_with("0.0000000000000000e0,"), "{second}");
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
        assert!(write_atomic(&dir.path().join("missing/a.csv"), b"x").is_err());
    }
}

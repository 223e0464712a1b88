//! Plot-ready CSV tables. Numbers use 17 significant digits so every value
//! parses back to the same `f64`.

use std::io::{Read, Write};

use polysweep_core::crawler::CrawlerRun;
use polysweep_core::sweeping::{TimeGrid, Trajectory};
use polysweep_core::ActiveSet;

use crate::LabError;

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_f64(field: &str) -> Result<f64, LabError> {
    field.trim().parse().map_err(|_| LabError::Table(format!("not a number: {field:?}")))
}

fn trajectory_header(n: usize, m: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend((1..=n).map(|i| format!("z{i}")));
    h.extend((1..=m).map(|i| format!("eta_{i}")));
    h.push("active_bitmask".into());
    h
}

/// `t, z1..zn, eta_1..eta_m, active_bitmask`; `eta` is the multiplier of the
/// step that landed on the row's state.
pub fn write_trajectory<W: Write>(traj: &Trajectory, out: W) -> Result<(), LabError> {
    let n = traj.states()[0].len();
    let m = traj.normals().len();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(trajectory_header(n, m))?;
    for (k, z) in traj.states().iter().enumerate() {
        let mut row = vec![fmt_f64(traj.time(k))];
        row.extend(z.iter().map(|&v| fmt_f64(v)));
        row.extend(traj.multipliers()[k].iter().map(|&v| fmt_f64(v)));
        row.push(traj.active_sets()[k].bits().to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Inverse of [`write_trajectory`]; the grid and normals are not stored in
/// the table and must be supplied.
pub fn read_trajectory<R: Read>(
    input: R,
    grid: TimeGrid,
    normals: Vec<Vec<f64>>,
) -> Result<Trajectory, LabError> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    let m = normals.len();
    let n = headers
        .len()
        .checked_sub(m + 2)
        .ok_or_else(|| LabError::Table(format!("{} columns for {m} constraints", headers.len())))?;
    let expected = trajectory_header(n, m);
    if headers.iter().ne(expected.iter().map(String::as_str)) {
        return Err(LabError::Table(format!("unexpected header {headers:?}")));
    }
    let mut states = Vec::new();
    let mut multipliers = Vec::new();
    let mut active = Vec::new();
    for record in r.records() {
        let record = record?;
        let values: Vec<&str> = record.iter().collect();
        let t = parse_f64(values[0])?;
        let k = states.len();
        if (t - grid.time(k)).abs() > 1e-9 * grid.period.max(1.0) {
            return Err(LabError::Table(format!("row {k}: time {t} is off the grid")));
        }
        states.push(values[1..=n].iter().map(|s| parse_f64(s)).collect::<Result<Vec<_>, _>>()?);
        multipliers.push(values[n + 1..=n + m].iter().map(|s| parse_f64(s)).collect::<Result<Vec<_>, _>>()?);
        let bits = values[n + m + 1]
            .trim()
            .parse()
            .map_err(|_| LabError::Table(format!("row {k}: bad bitmask")))?;
        active.push(ActiveSet::from_bits(bits));
    }
    Ok(Trajectory::from_parts(grid, normals, states, multipliers, active)?)
}

/// `t, x1..xN, y, z1..z_{N−1}, w1..w_{N−1}`.
pub fn write_motion<W: Write>(run: &CrawlerRun, out: W) -> Result<(), LabError> {
    let n = run.x[0].len();
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("x{i}")));
    header.push("y".into());
    header.extend((1..n).map(|i| format!("z{i}")));
    header.extend((1..n).map(|i| format!("w{i}")));
    w.write_record(&header)?;
    for (k, x) in run.x.iter().enumerate() {
        let mut row = vec![fmt_f64(run.w.time(k))];
        row.extend(x.iter().map(|&v| fmt_f64(v)));
        row.push(fmt_f64(run.y[k]));
        row.extend(run.z(k).iter().map(|&v| fmt_f64(v)));
        row.extend(run.w.states()[k].iter().map(|&v| fmt_f64(v)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use polysweep_core::{scenarios, sweeping, Tolerances};

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0] {
            assert_eq!(parse_f64(&fmt_f64(v)).unwrap(), v);
        }
    }

    #[test]
    fn trajectory_round_trip() {
        let s = scenarios::scenario_by_name("wedge").unwrap();
        let p = s.problem().unwrap();
        let traj = sweeping::simulate(p, &s.start, 0.0, 2, 50, &Tolerances::default()).unwrap();
        let mut buf = Vec::new();
        write_trajectory(&traj, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,z1,z2,eta_1,eta_2,eta_3,active_bitmask\n"));
        let back = read_trajectory(buf.as_slice(), *traj.grid(), traj.normals().to_vec()).unwrap();
        assert_eq!(back.states(), traj.states());
        assert_eq!(back.multipliers(), traj.multipliers());
        assert_eq!(back.active_sets(), traj.active_sets());
        assert!(back.reconstruction_residual() <= 1e-12);
    }

    #[test]
    fn rejects_foreign_tables() {
        let grid = TimeGrid::new(0.0, 1.0, 1).unwrap();
        let bad = "t,a,b\n0,1,2\n";
        assert!(read_trajectory(bad.as_bytes(), grid, vec![vec![1.0]]).is_err());
    }
}

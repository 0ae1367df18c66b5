//! CSV encodings of trajectories, loci and raw shot profiles.
//! Floats are written with 17 significant digits.

use std::io::{self, Write};

use crate::homoclinic::{LocusPoint, MissProfile};
use crate::integrate::Trajectory;
use crate::sysdef::{hamiltonian, Params};

pub const TRAJECTORY_HEADER: &str = "t,u,v,p_u,p_v,H";
pub const LOCUS_HEADER: &str = "a_star,b,sigma,k,miss_residual,lambda";
pub const PROFILE_HEADER: &str = "a,b,sigma,k,v_at_crossing,t_crossing,outcome";

/// `x` with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_trajectory_csv<W: Write + ?Sized>(w: &mut W, tr: &Trajectory, p: &Params) -> io::Result<()> {
    writeln!(w, "{TRAJECTORY_HEADER}")?;
    for (t, s) in tr.nodes() {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            fmt17(*t),
            fmt17(s.u),
            fmt17(s.v),
            fmt17(s.p_u),
            fmt17(s.p_v),
            fmt17(hamiltonian(s, p))
        )?;
    }
    Ok(())
}

pub fn write_locus_csv<W: Write + ?Sized>(w: &mut W, loci: &[LocusPoint]) -> io::Result<()> {
    writeln!(w, "{LOCUS_HEADER}")?;
    for lp in loci {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            fmt17(lp.a_star),
            fmt17(lp.b),
            lp.sigma.as_int(),
            lp.k,
            fmt17(lp.miss_residual),
            fmt17(lp.lambda)
        )?;
    }
    Ok(())
}

/// One line per crossing; a profile without crossings gets a single line
/// with `k = 0` and empty crossing fields.
pub fn write_profile_rows<W: Write + ?Sized>(w: &mut W, profiles: &[MissProfile]) -> io::Result<()> {
    for prof in profiles {
        let head = format!(
            "{},{},{}",
            fmt17(prof.params.a),
            fmt17(prof.params.b),
            prof.sigma.as_int()
        );
        if prof.crossings.is_empty() {
            writeln!(w, "{head},0,,,{}", prof.outcome.label())?;
        }
        for c in &prof.crossings {
            writeln!(
                w,
                "{head},{},{},{},{}",
                c.index,
                fmt17(c.s.v),
                fmt17(c.t),
                prof.outcome.label()
            )?;
        }
    }
    Ok(())
}

pub fn locus_csv_string(loci: &[LocusPoint]) -> String {
    let mut buf = Vec::new();
    write_locus_csv(&mut buf, loci).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("ascii")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homoclinic::Sigma;

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt17(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt17(-3.75), "-3.7500000000000000e0");
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02e23] {
            assert_eq!(fmt17(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn locus_layout() {
        let lp = LocusPoint {
            a_star: -3.75,
            b: 3.0,
            sigma: Sigma::Minus,
            k: 2,
            miss_residual: 0.0,
            lambda: 2.0,
        };
        let s = locus_csv_string(&[lp]);
        let mut lines = s.lines();
        assert_eq!(lines.next(), Some(LOCUS_HEADER));
        let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(fields.len(), 6);
        assert_eq!(fields[2], "-1");
        assert_eq!(fields[3], "2");
    }
}

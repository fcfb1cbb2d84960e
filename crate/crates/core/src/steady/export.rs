use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{Extremum, Shooter, SteadyProfile};

/// JSON header accompanying an exported profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileHeader {
    pub m: u32,
    pub a: f64,
    pub r_max: f64,
    pub tol: f64,
    pub shooter: Shooter,
    pub extrema: Vec<Extremum>,
    /// First critical value, when the profile has one.
    pub theta_m: Option<f64>,
}

pub fn profile_header(profile: &SteadyProfile) -> ProfileHeader {
    ProfileHeader {
        m: profile.m,
        a: profile.a,
        r_max: profile.r_max,
        tol: profile.tol,
        shooter: profile.shooter,
        extrema: profile.extrema.clone(),
        theta_m: profile.extrema.first().map(|e| e.omega.abs()),
    }
}

/// Writes `r,phi,dphi` rows at the integrator's accepted steps.
pub fn write_profile_csv<W: Write>(profile: &SteadyProfile, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["r", "phi", "dphi"])?;
    let (r, _) = profile.samples();
    for ri in r {
        let v = profile.eval(ri).unwrap_or([f64::NAN; 3]);
        w.write_record([format!("{ri:e}"), format!("{:e}", v[0]), format!("{:e}", v[1])])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::steady::shoot_profile;

    #[test]
    fn csv_and_header_round_trip() {
        let p = shoot_profile(3, 1.0, 30.0, 1e-10).unwrap();
        let mut buf = Vec::new();
        write_profile_csv(&p, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("r,phi,dphi"));
        assert_eq!(lines.count(), p.samples().0.len());
        let h = profile_header(&p);
        let json = serde_json::to_string(&h).unwrap();
        let back: ProfileHeader = serde_json::from_str(&json).unwrap();
        assert_eq!(back, h);
        assert!(h.theta_m.unwrap() > std::f64::consts::FRAC_PI_2);
    }
}

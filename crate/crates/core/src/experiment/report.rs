//! Analytic noise-schedule reports: no training, just the accountant
//! evaluated over a full (K, R) schedule, with the black-box baseline and
//! the per-step gap alongside.

use std::io::Write;

use crate::accountant::{step_index, PrivacyParams};
use crate::error::Result;
use crate::math::ln_gamma;

/// One step of the analytic schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleRow {
    pub round: u64,
    pub client: u64,
    pub step: u64,
    pub incremental_variance: f64,
    pub cumulative_variance: f64,
    pub required_variance: f64,
    pub blackbox_variance: f64,
    /// blackbox - required at this step.
    pub gap: f64,
    pub effective_delta: f64,
}

/// Evaluate the full schedule for a ring of `clients` over `rounds`.
pub fn noise_schedule(params: &PrivacyParams, clients: u64, rounds: u64) -> Vec<ScheduleRow> {
    let mut rows = Vec::with_capacity((clients * rounds) as usize);
    let mut cumulative = 0.0;
    for round in 1..=rounds {
        for client in 1..=clients {
            let step = step_index(round, client, clients);
            let incremental = params.incremental_variance(step);
            cumulative += incremental;
            let required = params.required_variance(step);
            let blackbox = params.blackbox_variance(step);
            rows.push(ScheduleRow {
                round,
                client,
                step,
                incremental_variance: incremental,
                cumulative_variance: cumulative,
                required_variance: required,
                blackbox_variance: blackbox,
                gap: blackbox - required,
                effective_delta: params.effective_delta(step),
            });
        }
    }
    rows
}

/// Closed form for the step-m gap:
/// (2D/eps^2) * [(m-1) ln(1.25 N / delta0) + ln Gamma(m)].
pub fn gap_closed_form(params: &PrivacyParams, step: u64) -> f64 {
    assert!(step >= 1);
    let scale = 2.0 * params.dim as f64 / (params.epsilon * params.epsilon);
    let base = (1.25 * params.aggregated_samples as f64 / params.delta0).ln();
    scale * ((step as f64 - 1.0) * base + ln_gamma(step as f64))
}

/// Write the schedule as CSV with round-trippable floats.
pub fn write_schedule_csv<W: Write>(rows: &[ScheduleRow], mut w: W) -> Result<()> {
    writeln!(
        w,
        "round,client,step,incremental_variance,cumulative_variance,required_variance,blackbox_variance,gap,effective_delta"
    )?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.round,
            r.client,
            r.step,
            r.incremental_variance,
            r.cumulative_variance,
            r.required_variance,
            r.blackbox_variance,
            r.gap,
            r.effective_delta
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> PrivacyParams {
        PrivacyParams::new(0.4, 1e-3, 100, 60).unwrap()
    }

    #[test]
    fn schedule_has_full_ring_order_and_telescopes() {
        let rows = noise_schedule(&params(), 5, 3);
        assert_eq!(rows.len(), 15);
        assert_eq!((rows[0].round, rows[0].client, rows[0].step), (1, 1, 1));
        assert_eq!((rows[14].round, rows[14].client, rows[14].step), (3, 5, 15));
        for r in &rows {
            assert!(
                (r.cumulative_variance - r.required_variance).abs()
                    <= 1e-9 * r.required_variance
            );
        }
    }

    #[test]
    fn dominance_with_equality_only_at_step_one() {
        let rows = noise_schedule(&params(), 4, 10);
        assert_eq!(rows[0].gap, 0.0);
        assert_eq!(rows[0].blackbox_variance, rows[0].required_variance);
        for r in &rows[1..] {
            assert!(r.gap > 0.0, "step {} gap {}", r.step, r.gap);
        }
    }

    #[test]
    fn gap_matches_closed_form() {
        let p = params();
        let rows = noise_schedule(&p, 6, 8);
        for r in &rows {
            let want = gap_closed_form(&p, r.step);
            let tol = 1e-9 * want.abs().max(1.0);
            assert!(
                (r.gap - want).abs() <= tol,
                "step {}: gap {} vs closed form {}",
                r.step,
                r.gap,
                want
            );
        }
    }

    #[test]
    fn csv_shape_and_round_trip() {
        let rows = noise_schedule(&params(), 2, 2);
        let mut buf = Vec::new();
        write_schedule_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 5);
        let last: Vec<&str> = text.lines().last().unwrap().split(',').collect();
        assert_eq!(&last[..3], &["2", "2", "4"]);
        let blackbox: f64 = last[6].parse().unwrap();
        assert_eq!(blackbox, rows[3].blackbox_variance);
    }
}

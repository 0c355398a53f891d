//! Render a benchmark report as a text table (strengths as rows, experiments
//! as columns, "mean (sd)" cells) or as CSV with one row per cell.

use crate::bench::BenchReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Table,
    Csv,
}

pub fn emit_report(report: &BenchReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Table => emit_table(report),
        ReportFormat::Csv => emit_csv(report),
    }
}

fn sorted_strengths(report: &BenchReport) -> Vec<u16> {
    let mut strengths: Vec<u16> = report.cells.iter().map(|c| c.strength).collect();
    strengths.sort_unstable();
    strengths.dedup();
    strengths
}

fn sorted_experiments(report: &BenchReport) -> Vec<u8> {
    let mut experiments: Vec<u8> = report.cells.iter().map(|c| c.experiment).collect();
    experiments.sort_unstable();
    experiments.dedup();
    experiments
}

fn emit_table(report: &BenchReport) -> String {
    let strengths = sorted_strengths(report);
    let experiments = sorted_experiments(report);
    let mut out = String::new();
    out.push_str(&format!(
        "key expansion time, microseconds, mean (sd) over {} samples per cell\n",
        report.iterations
    ));
    out.push_str(&format!(
        "host: {}; build profile: {}; batch size for experiments 3/4: {}\n\n",
        report.host, report.profile, report.batch_size
    ));

    let mut header = format!("{:<10}", "strength");
    for e in &experiments {
        header.push_str(&format!("{:<26}", format!("experiment {e}")));
    }
    out.push_str(header.trim_end());
    out.push('\n');
    for strength in &strengths {
        let mut row = format!("{strength:<10}");
        for e in &experiments {
            match report.cell(*strength, *e) {
                Some(cell) => row.push_str(&format!(
                    "{:<26}",
                    format!("{:.3} ({:.3})", cell.mean_us, cell.sd_us)
                )),
                None => row.push_str(&format!("{:<26}", "-")),
            }
        }
        out.push_str(row.trim_end());
        out.push('\n');
    }

    out.push_str("\nthroughput, keys per second\n");
    let mut header = format!("{:<10}", "strength");
    for e in &experiments {
        header.push_str(&format!("{:<26}", format!("experiment {e}")));
    }
    out.push_str(header.trim_end());
    out.push('\n');
    for strength in &strengths {
        let mut row = format!("{strength:<10}");
        for e in &experiments {
            match report.cell(*strength, *e) {
                Some(cell) => row.push_str(&format!("{:<26.3}", cell.keys_per_second())),
                None => row.push_str(&format!("{:<26}", "-")),
            }
        }
        out.push_str(row.trim_end());
        out.push('\n');
    }
    out
}

fn emit_csv(report: &BenchReport) -> String {
    let mut out = String::from("strength,experiment,mean_us,sd_us,samples,batch,keys_per_sec\n");
    for cell in &report.cells {
        out.push_str(&format!(
            "{},{},{:.3},{:.3},{},{},{:.3}\n",
            cell.strength,
            cell.experiment,
            cell.mean_us,
            cell.sd_us,
            cell.samples,
            cell.batch,
            cell.keys_per_second()
        ));
    }
    out
}

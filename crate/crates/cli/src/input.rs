use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use leafwise::geometry::ChartDescription;
use leafwise::instances::{make_instance_with, ExpectedLp, ExpectedProperties, InstanceDescriptor};
use leafwise::measures::MeasureFile;
use leafwise::{FoliatedChartModel, TransverseMeasureField};
use serde::Serialize;

/// Where the chart and measure come from.
#[derive(Args, Clone, Debug, Serialize)]
pub struct InputArgs {
    /// Built-in instance name (see `instances list`).
    #[arg(long)]
    pub instance: Option<String>,
    /// Leaf spacing for a built-in instance.
    #[arg(long)]
    pub h: Option<f64>,
    /// Instance file written by `instances export`.
    #[arg(long, conflicts_with = "instance")]
    pub instance_file: Option<PathBuf>,
    /// Chart description JSON.
    #[arg(long, conflicts_with_all = ["instance", "instance_file"])]
    pub chart: Option<PathBuf>,
    /// Measure JSON; replaces the instance's measure when combined with one.
    #[arg(long, alias = "from-measure")]
    pub measure: Option<PathBuf>,
}

fn read(path: &PathBuf) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

impl InputArgs {
    pub fn load(&self) -> Result<InstanceDescriptor> {
        let mut inst = if let Some(name) = &self.instance {
            make_instance_with(name, self.h)?
        } else if let Some(path) = &self.instance_file {
            InstanceDescriptor::from_json(&read(path)?)?
        } else if let Some(path) = &self.chart {
            let desc: ChartDescription = serde_json::from_str(&read(path)?)?;
            let chart = FoliatedChartModel::from_description(desc)?;
            let Some(mpath) = &self.measure else { bail!("--chart needs --measure") };
            let file: MeasureFile = serde_json::from_str(&read(mpath)?)?;
            let measure = TransverseMeasureField::from_file(&chart, &file)?;
            return Ok(InstanceDescriptor {
                name: "custom".into(),
                chart,
                measure,
                expected: ExpectedProperties {
                    has_invariant_measure: false,
                    reeb_transverse: true,
                    lp: ExpectedLp::FeasibleBeta,
                    lp_slice: 0,
                    reference: Default::default(),
                },
                notes: vec![],
            });
        } else {
            bail!("one of --instance, --instance-file or --chart is required");
        };
        if let Some(mpath) = &self.measure {
            let file: MeasureFile = serde_json::from_str(&read(mpath)?)?;
            inst = inst.with_measure(TransverseMeasureField::from_file(&inst.chart, &file)?);
        }
        Ok(inst)
    }
}

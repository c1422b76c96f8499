use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use ctiflow::flow_compiler::{compile_program, FlowProgram, TopologyConfig};
use ctiflow::ioc_store::IndicatorStore;
use ctiflow::net::NUM_TABLES;
use ctiflow::odl_client::{flow_name, ControllerEndpoint, DocumentFormat, OdlClient};
use ctiflow::pipeline_engine::{render_flows, render_table_stats, SwitchState};
use ctiflow::replay_harness::{make_ping_stream, render_ping_banner, render_ping_report, replay};

mod scenario;

use scenario::Expect;

#[derive(Parser, Debug)]
#[command(name = "ctiflow", version, about = "Compile threat-intelligence indicators into OpenFlow tables")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Indicator store file.
    #[arg(long, global = true, default_value = "ctiflow.store")]
    store: PathBuf,
    /// Topology file; the built-in three-host testbed when omitted.
    #[arg(long, global = true)]
    topology: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=100))]
    min_confidence: u8,
    /// Controller base URL, e.g. http://127.0.0.1:8181
    #[arg(long, global = true)]
    endpoint: Option<String>,
    #[arg(long, global = true, default_value = "openflow:1")]
    node: String,
    #[arg(long, global = true, default_value = "admin")]
    user: String,
    #[arg(long, global = true, default_value = "admin", env = "CTIFLOW_PASSWORD", hide_env_values = true)]
    password: String,
    #[arg(long, global = true, default_value = "json")]
    format: DocumentFormat,
    #[arg(long, global = true, default_value_t = 10)]
    timeout: u64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse feeds and merge them into the store.
    Ingest {
        #[arg(required = true)]
        feeds: Vec<PathBuf>,
    },
    /// Compile the store into a flow program.
    Compile {
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Install a program in the software switch and replay a scenario.
    Simulate {
        program: PathBuf,
        scenario: PathBuf,
        /// Continue from a saved switch state instead of a fresh install.
        #[arg(long)]
        state: Option<PathBuf>,
        #[arg(long)]
        state_out: Option<PathBuf>,
        /// Print the key=value summary instead of the ping report.
        #[arg(long)]
        kv: bool,
    },
    /// Table and flow dumps for a program, optionally after a simulation.
    Stats {
        program: PathBuf,
        #[arg(long)]
        state: Option<PathBuf>,
        #[arg(long)]
        table: Option<u8>,
    },
    /// Push (or delete) a program on the controller.
    Push {
        program: PathBuf,
        #[arg(long)]
        delete: bool,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

impl Global {
    fn topology(&self) -> Result<TopologyConfig> {
        let topo = match &self.topology {
            Some(p) => TopologyConfig::parse(&read(p)?).with_context(|| format!("topology {}", p.display()))?,
            None => TopologyConfig::three_host_testbed(),
        };
        topo.validate()?;
        Ok(topo)
    }

    fn program(&self, path: &Path) -> Result<FlowProgram> {
        let topo = self.topology()?;
        FlowProgram::parse(&read(path)?, &topo).with_context(|| format!("program {}", path.display()))
    }

    fn endpoint(&self) -> Result<ControllerEndpoint> {
        let base_url = self.endpoint.clone().ok_or_else(|| anyhow!("--endpoint is required"))?;
        let ep = ControllerEndpoint {
            base_url,
            node_id: self.node.clone(),
            user: self.user.clone(),
            secret: self.password.clone(),
            timeout_s: self.timeout,
            format: self.format,
        };
        ep.validate()?;
        Ok(ep)
    }
}

fn switch_for(program: &FlowProgram, state: Option<&Path>) -> Result<SwitchState> {
    match state {
        None => {
            let mut sw = SwitchState::new();
            sw.install_program(program)?;
            Ok(sw)
        }
        Some(p) => {
            let sw = SwitchState::from_snapshot(&read(p)?).with_context(|| format!("state {}", p.display()))?;
            let mut installed: Vec<_> = sw.flows().map(|(_, e)| e.identity_key()).collect();
            let mut wanted: Vec<_> = program.entries.iter().map(|e| e.identity_key()).collect();
            installed.sort();
            wanted.sort();
            if installed != wanted {
                bail!("state {} does not hold program entries", p.display());
            }
            Ok(sw)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let g = &cli.global;
    match &cli.command {
        Command::Ingest { feeds } => {
            let mut store = IndicatorStore::load_or_default(&g.store)?;
            let mut lines = Vec::new();
            for feed in feeds {
                let report = store.ingest_path(feed).with_context(|| format!("feed {}", feed.display()))?;
                for skip in &report.skipped {
                    eprintln!("{}: line {}: {}", feed.display(), skip.line_number, skip.reason);
                }
                lines.push(report.summary_line());
            }
            store.save(&g.store)?;
            for l in lines {
                println!("{l}");
            }
        }
        Command::Compile { out } => {
            let topo = g.topology()?;
            let store = IndicatorStore::load(&g.store)?;
            let program = compile_program(&topo, &store, g.min_confidence)?;
            for (ind, reason) in &program.skipped_indicators {
                eprintln!("skipped {} {}: {reason}", ind.itype(), ind.value());
            }
            let text = program.to_text();
            match out {
                Some(p) => write(p, &text)?,
                None => print!("{text}"),
            }
            let counts: Vec<String> =
                (0..NUM_TABLES as u8).map(|t| format!("table{t}={}", program.count_in_table(t))).collect();
            eprintln!("entries={} {}", program.entries.len(), counts.join(" "));
        }
        Command::Simulate { program, scenario, state, state_out, kv } => {
            let topo = g.topology()?;
            let program = g.program(program)?;
            let sc =
                scenario::parse(&read(scenario)?, &topo).with_context(|| format!("scenario {}", scenario.display()))?;
            let mut sw = switch_for(&program, state.as_deref())?;
            let packets = make_ping_stream(&sc.ping);
            let summary = replay(&mut sw, &packets, Some(sc.egress), sc.interval_s);
            if *kv {
                print!("{}", summary.to_kv());
            } else {
                print!("{}", render_ping_banner(&sc.ping));
                println!();
                print!("{}", render_ping_report(&summary, sc.ping.dst_ip));
                println!();
                print!("{}", render_table_stats(&sw.table_stats()));
            }
            if let Some(p) = state_out {
                write(p, &sw.to_snapshot())?;
            }
            let met = match sc.expect {
                None => true,
                Some(Expect::Deliver) => summary.delivered == summary.transmitted,
                Some(Expect::Drop) => summary.delivered == 0,
            };
            if !met {
                eprintln!("scenario expectation not met: {} of {} delivered", summary.delivered, summary.transmitted);
                return Ok(ExitCode::from(2));
            }
        }
        Command::Stats { program, state, table } => {
            if let Some(t) = table {
                if usize::from(*t) >= NUM_TABLES {
                    bail!("no table {t}");
                }
            }
            let program = g.program(program)?;
            let sw = switch_for(&program, state.as_deref())?;
            let stats = sw.table_stats();
            let shown: Vec<_> = stats.iter().filter(|s| table.is_none_or(|t| s.table_id == t)).cloned().collect();
            print!("{}", render_table_stats(&shown));
            println!();
            print!("{}", render_flows(&sw, *table));
        }
        Command::Push { program, delete } => {
            let program = g.program(program)?;
            let client = OdlClient::new(g.endpoint()?)?;
            if *delete {
                for e in &program.entries {
                    client.delete_flow(e.table_id, &flow_name(e))?;
                }
                println!("deleted {} flows from {}", program.entries.len(), g.node);
            } else {
                let names = client.push_program(&program)?;
                println!("pushed {} flows to {}", names.len(), g.node);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("ctiflow: {e:#}");
            ExitCode::FAILURE
        }
    }
}

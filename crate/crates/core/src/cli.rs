// SPDX-License-Identifier: Apache-2.0

//! Command-line front end. `main` only forwards to [`run`], so the whole
//! behavior (exit codes included) is testable in-process.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::emit::{
    emit_bundle, link_submodule_fts, EmitOptions, LinkFlags, LinkedChild, Testbench, Tool,
};
use crate::parser::parse_module_file;
use crate::span::{SourceSpan, Warning};
use crate::synth::SynthOptions;
use crate::trace::{
    check_bundle_on_model, choose_model, read_csv, write_csv, AuxSimulator, CompiledProperty,
    Outcome, ReferenceModel,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "autoft",
    version,
    about = "Formal testbench generator for annotated SystemVerilog"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Generate the testbench bundle for one annotated module.
    Gen(GenArgs),
    /// Generate a testbench that also carries submodule properties.
    Link(LinkArgs),
    /// Check generated properties against a reference model or a trace.
    Check(CheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ToolArg {
    Jaspergold,
    Symbiyosys,
    Both,
}

#[derive(Debug, Args)]
struct GenArgs {
    /// Annotated SystemVerilog source.
    input: PathBuf,
    /// Output directory; the bundle goes to <OUTDIR>/<dut>/.
    #[arg(short = 'o', long = "outdir", default_value = "ft")]
    outdir: PathBuf,
    #[arg(long, value_enum, default_value_t = ToolArg::Both)]
    tool: ToolArg,
    #[arg(long, default_value = "clk")]
    clk: String,
    #[arg(long, default_value = "rst_n")]
    rst: String,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    rst_active_low: bool,
    /// Emit every assumption as an assertion.
    #[arg(long)]
    assert_inputs: bool,
    /// Replace unbounded liveness with a window of N cycles.
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u32).range(1..))]
    bounded: Option<u32>,
    /// Default outstanding-request bound for every transaction.
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u32).range(1..))]
    max_outstanding: Option<u32>,
    /// Per-transaction bound, as TNAME=N. Repeatable.
    #[arg(long = "max-outstanding-txn", value_name = "TNAME=N", value_parser = parse_txn_max)]
    max_outstanding_txn: Vec<(String, u32)>,
    /// DUT path written into tool scripts (default: the input file name).
    #[arg(long)]
    rtl_path: Option<String>,
}

#[derive(Debug, Args)]
struct LinkArgs {
    #[command(flatten)]
    gen: GenArgs,
    /// Submodule source with link flags, as PATH[:am][,as]. Repeatable.
    #[arg(long = "child", value_name = "PATH[:FLAGS]", value_parser = parse_child, required = true)]
    children: Vec<ChildArg>,
}

#[derive(Debug, Clone)]
struct ChildArg {
    path: PathBuf,
    flags: LinkFlags,
}

#[derive(Debug, Args)]
struct CheckArgs {
    /// Annotated SystemVerilog source.
    input: PathBuf,
    /// Reference model, or `auto` to pick from a `// autoft: model=` comment
    /// or the transaction shape.
    #[arg(long, default_value = "auto", value_parser = parse_model)]
    model: ModelArg,
    /// Cycles of free environment behavior per generated trace.
    #[arg(long, default_value_t = crate::trace::DEFAULT_PREFIX_LEN)]
    prefix_len: usize,
    /// Evaluate on a CSV trace instead of a reference model.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write one CSV counterexample per violated property here.
    #[arg(long)]
    cex_dir: Option<PathBuf>,
    /// Check the bounded form of liveness with a window of N cycles.
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u32).range(1..))]
    bounded: Option<u32>,
}

#[derive(Debug, Clone, Copy)]
enum ModelArg {
    Auto,
    Named(ReferenceModel),
}

fn parse_model(s: &str) -> Result<ModelArg, String> {
    if s == "auto" {
        Ok(ModelArg::Auto)
    } else {
        s.parse().map(ModelArg::Named)
    }
}

fn parse_txn_max(s: &str) -> Result<(String, u32), String> {
    let (t, n) = s
        .split_once('=')
        .ok_or_else(|| format!("expected TNAME=N, got `{s}`"))?;
    let n: u32 = n.parse().map_err(|_| format!("`{n}` is not a number"))?;
    if n == 0 {
        return Err("the bound must be at least 1".into());
    }
    Ok((t.to_string(), n))
}

fn parse_child(s: &str) -> Result<ChildArg, String> {
    let (path, flags) = match s.rsplit_once(':') {
        Some((p, f)) if !f.contains('/') && !f.contains('\\') => (p, f),
        _ => (s, ""),
    };
    let mut out = LinkFlags::default();
    for f in flags.split(',').map(str::trim).filter(|f| !f.is_empty()) {
        match f.to_ascii_lowercase().as_str() {
            "am" => out.am = true,
            "as" => out.as_ = true,
            other => return Err(format!("unknown link flag `{other}` (expected am, as)")),
        }
    }
    Ok(ChildArg {
        path: PathBuf::from(path),
        flags: out,
    })
}

struct Reporter<'a> {
    err: &'a mut dyn Write,
    color: bool,
}

impl Reporter<'_> {
    fn paint(&self, code: &str, s: &str) -> String {
        if self.color {
            format!("\x1b[{code}m{s}\x1b[0m")
        } else {
            s.to_string()
        }
    }

    fn error(&mut self, span: Option<&SourceSpan>, msg: &str, text: Option<&str>) {
        let label = self.paint("1;31", "error");
        let _ = match span {
            Some(s) => writeln!(self.err, "{s}: {label}: {msg}"),
            None => writeln!(self.err, "{label}: {msg}"),
        };
        if let Some(t) = text.map(str::trim).filter(|t| !t.is_empty()) {
            let _ = writeln!(self.err, "    {t}");
        }
    }

    fn warning(&mut self, w: &Warning) {
        let label = self.paint("1;33", "warning");
        let _ = match &w.span {
            Some(s) => writeln!(self.err, "{s}: {label}: {}", w.message),
            None => writeln!(self.err, "{label}: {}", w.message),
        };
    }
}

fn source_line(src: &str, line: u32) -> Option<&str> {
    src.lines().nth(line.saturating_sub(1) as usize)
}

fn display_path(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

/// Reads, parses and validates one module. `Err` carries the exit code.
fn load(
    path: &Path,
    opts: &EmitOptions,
    rep: &mut Reporter<'_>,
) -> Result<(String, Testbench), i32> {
    let src = match fs::read_to_string(path) {
        Ok(s) => s,
        Err(e) => {
            rep.error(None, &format!("cannot read {}: {e}", path.display()), None);
            return Err(EXIT_USAGE);
        }
    };
    let file = display_path(path);
    let pm = match parse_module_file(&src, &file) {
        Ok(pm) => pm,
        Err(errs) => {
            for e in &errs.0 {
                let text = e.text().or_else(|| source_line(&src, e.span().line));
                rep.error(Some(e.span()), &e.to_string(), text);
            }
            return Err(EXIT_INVALID);
        }
    };
    match Testbench::build(&pm, opts) {
        Ok(tb) => {
            for w in &tb.warnings {
                rep.warning(w);
            }
            Ok((src, tb))
        }
        Err(errs) => {
            for e in &errs.0 {
                rep.error(
                    Some(e.span()),
                    &e.to_string(),
                    source_line(&src, e.span().line),
                );
            }
            Err(EXIT_INVALID)
        }
    }
}

fn emit_options(g: &GenArgs) -> EmitOptions {
    let tools = match g.tool {
        ToolArg::Jaspergold => vec![Tool::JasperGold],
        ToolArg::Symbiyosys => vec![Tool::SymbiYosys],
        ToolArg::Both => vec![Tool::JasperGold, Tool::SymbiYosys],
    };
    let per_txn: BTreeMap<String, u32> = g.max_outstanding_txn.iter().cloned().collect();
    EmitOptions {
        tools,
        clk: g.clk.clone(),
        rst: g.rst.clone(),
        rst_active_low: g.rst_active_low,
        assert_inputs: g.assert_inputs,
        bounded: g.bounded,
        synth: SynthOptions {
            max_outstanding: g.max_outstanding,
            per_txn,
        },
        rtl_path: g.rtl_path.clone(),
    }
}

fn write_bundle(
    bundle: &crate::emit::TestbenchBundle,
    outdir: &Path,
    out: &mut dyn Write,
    rep: &mut Reporter<'_>,
) -> i32 {
    match bundle.write_to(outdir) {
        Ok(paths) => {
            for p in paths {
                let _ = writeln!(out, "{}", p.display());
            }
            EXIT_OK
        }
        Err(e) => {
            rep.error(
                None,
                &format!("cannot write to {}: {e}", outdir.display()),
                None,
            );
            EXIT_USAGE
        }
    }
}

fn cmd_gen(g: &GenArgs, out: &mut dyn Write, rep: &mut Reporter<'_>) -> i32 {
    let opts = emit_options(g);
    let (_, tb) = match load(&g.input, &opts, rep) {
        Ok(x) => x,
        Err(code) => return code,
    };
    write_bundle(&emit_bundle(&tb, &opts), &g.outdir, out, rep)
}

fn cmd_link(l: &LinkArgs, out: &mut dyn Write, rep: &mut Reporter<'_>) -> i32 {
    let opts = emit_options(&l.gen);
    let (_, parent) = match load(&l.gen.input, &opts, rep) {
        Ok(x) => x,
        Err(code) => return code,
    };
    let mut child_tbs = Vec::new();
    let mut failed = None;
    for c in &l.children {
        let child_opts = EmitOptions {
            rtl_path: None,
            ..opts.clone()
        };
        match load(&c.path, &child_opts, rep) {
            Ok((_, tb)) => child_tbs.push(tb),
            Err(code) => failed = Some(failed.map_or(code, |f: i32| f.max(code))),
        }
    }
    if let Some(code) = failed {
        return code;
    }
    let children: Vec<LinkedChild<'_>> = l
        .children
        .iter()
        .zip(&child_tbs)
        .map(|(c, tb)| LinkedChild {
            tb,
            flags: c.flags,
            rtl_path: None,
        })
        .collect();
    match link_submodule_fts(&parent, &children, &opts) {
        Ok(bundle) => write_bundle(&bundle, &l.gen.outdir, out, rep),
        Err(e) => {
            rep.error(None, &e.to_string(), None);
            EXIT_INVALID
        }
    }
}

fn cmd_check(c: &CheckArgs, out: &mut dyn Write, rep: &mut Reporter<'_>) -> i32 {
    let opts = EmitOptions {
        bounded: c.bounded,
        ..EmitOptions::default()
    };
    let (src, tb) = match load(&c.input, &opts, rep) {
        Ok(x) => x,
        Err(code) => return code,
    };
    if let Some(path) = &c.trace {
        return check_trace(&tb, path, out, rep);
    }
    let model = match c.model {
        ModelArg::Named(m) => m,
        ModelArg::Auto => match choose_model(&src, &tb) {
            Ok(m) => m,
            Err(e) => {
                rep.error(None, &e, None);
                return EXIT_INVALID;
            }
        },
    };
    let report = check_bundle_on_model(&tb, model, c.prefix_len);
    let _ = out.write_all(report.render().as_bytes());
    if let Some(dir) = &c.cex_dir {
        if let Err(e) = fs::create_dir_all(dir) {
            rep.error(None, &format!("cannot create {}: {e}", dir.display()), None);
            return EXIT_USAGE;
        }
        for t in report.violations() {
            if let Some((_, trace)) = &t.counterexample {
                let path = dir.join(format!("{}.csv", t.name));
                let res = fs::File::create(&path)
                    .map_err(|e| e.to_string())
                    .and_then(|f| write_csv(trace, f).map_err(|e| e.to_string()));
                if let Err(e) = res {
                    rep.error(None, &format!("cannot write {}: {e}", path.display()), None);
                    return EXIT_USAGE;
                }
            }
        }
    }
    if report.is_clean() {
        let _ = writeln!(out, "PASS");
        EXIT_OK
    } else {
        let names: Vec<&str> = report.violations().map(|t| t.name.as_str()).collect();
        let _ = writeln!(out, "FAIL: {}", names.join(", "));
        EXIT_INVALID
    }
}

fn check_trace(tb: &Testbench, path: &Path, out: &mut dyn Write, rep: &mut Reporter<'_>) -> i32 {
    let trace = match fs::File::open(path)
        .map_err(|e| e.to_string())
        .and_then(|f| read_csv(f).map_err(|e| e.to_string()))
    {
        Ok(t) => t,
        Err(e) => {
            rep.error(
                None,
                &format!("cannot read trace {}: {e}", path.display()),
                None,
            );
            return EXIT_USAGE;
        }
    };
    let full = match AuxSimulator::new(&tb.aux).augment(&trace) {
        Ok(t) => t,
        Err(e) => {
            rep.error(None, &e.to_string(), None);
            return EXIT_INVALID;
        }
    };
    let mut violated = false;
    for p in &tb.properties {
        match CompiledProperty::new(p, &full) {
            Ok(cp) => {
                let o = cp.outcome(&full);
                violated |= matches!(o, Outcome::Violated(_));
                let _ = writeln!(out, "{:<40} {:<6} {o}", p.name, p.directive);
            }
            Err(e) => {
                rep.error(None, &format!("{}: {e}", p.name), None);
                return EXIT_INVALID;
            }
        }
    }
    if violated {
        EXIT_INVALID
    } else {
        EXIT_OK
    }
}

/// Runs the tool with `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{e}");
                    EXIT_USAGE
                }
            };
        }
    };
    let color = std::env::var("AUTOFT_COLOR").is_ok_and(|v| v == "1");
    let mut rep = Reporter { err, color };
    match &cli.cmd {
        Cmd::Gen(g) => cmd_gen(g, out, &mut rep),
        Cmd::Link(l) => cmd_link(l, out, &mut rep),
        Cmd::Check(c) => cmd_check(c, out, &mut rep),
    }
}

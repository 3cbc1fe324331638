// SPDX-License-Identifier: Apache-2.0

//! Rendering of the property module, bind file and tool driver scripts.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::parser::{ParsedModule, Suffix};
use crate::props::{
    apply_link_transforms, gen_properties, Directive, GenOptions, GeneratedProperty, LinkMode,
};
use crate::span::Warning;
use crate::synth::{synthesize, AuxKind, AuxRule, SynthOptions, SynthOutput, TxnAux};
use crate::transaction::{build_transactions, BindingSource, Transaction, TxnErrors};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tool {
    JasperGold,
    SymbiYosys,
}

impl Tool {
    pub fn as_str(self) -> &'static str {
        match self {
            Tool::JasperGold => "jaspergold",
            Tool::SymbiYosys => "symbiyosys",
        }
    }
}

impl FromStr for Tool {
    type Err = EmitError;

    fn from_str(s: &str) -> Result<Self, EmitError> {
        match s {
            "jaspergold" => Ok(Tool::JasperGold),
            "symbiyosys" => Ok(Tool::SymbiYosys),
            _ => Err(EmitError::UnsupportedTool(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EmitError {
    #[error("unsupported tool `{0}` (expected jaspergold or symbiyosys)")]
    UnsupportedTool(String),
    #[error("transaction name `{tname}` is used by both `{first}` and `{second}`")]
    DuplicateTransactionName {
        tname: String,
        first: String,
        second: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratedFile {
    /// File name inside the bundle directory.
    pub name: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmitOptions {
    pub tools: Vec<Tool>,
    pub clk: String,
    pub rst: String,
    pub rst_active_low: bool,
    pub assert_inputs: bool,
    pub bounded: Option<u32>,
    pub synth: SynthOptions,
    /// Path of the DUT source as written into tool scripts.
    pub rtl_path: Option<String>,
}

impl Default for EmitOptions {
    fn default() -> Self {
        EmitOptions {
            tools: vec![Tool::JasperGold, Tool::SymbiYosys],
            clk: "clk".into(),
            rst: "rst_n".into(),
            rst_active_low: true,
            assert_inputs: false,
            bounded: None,
            synth: SynthOptions::default(),
            rtl_path: None,
        }
    }
}

impl EmitOptions {
    fn reset_expr(&self) -> String {
        if self.rst_active_low {
            format!("!{}", self.rst)
        } else {
            self.rst.clone()
        }
    }
}

/// Everything derived from one annotated module before rendering.
#[derive(Debug, Clone)]
pub struct Testbench {
    pub pm: ParsedModule,
    pub transactions: Vec<Transaction>,
    pub aux: SynthOutput,
    pub properties: Vec<GeneratedProperty>,
    pub warnings: Vec<Warning>,
}

impl Testbench {
    pub fn build(pm: &ParsedModule, opts: &EmitOptions) -> Result<Testbench, TxnErrors> {
        let model = build_transactions(pm)?;
        let aux = synthesize(pm, &model.transactions, &opts.synth);
        let gen = GenOptions {
            bounded: opts.bounded,
        };
        let properties = model
            .transactions
            .iter()
            .zip(&aux.txns)
            .flat_map(|(t, a)| gen_properties(t, a, &gen))
            .collect();
        let mut warnings = pm.warnings.clone();
        warnings.extend(model.warnings);
        warnings.extend(aux.warnings.iter().cloned());
        Ok(Testbench {
            pm: pm.clone(),
            transactions: model.transactions,
            aux,
            properties,
            warnings,
        })
    }

    pub fn dut(&self) -> &str {
        &self.pm.module_name
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestbenchBundle {
    pub dut: String,
    pub property_module: GeneratedFile,
    pub bind_file: GeneratedFile,
    pub tool_files: Vec<GeneratedFile>,
    /// Property modules of linked submodules.
    pub linked_modules: Vec<GeneratedFile>,
    pub properties: Vec<GeneratedProperty>,
    /// Transaction names with the module that declares them.
    pub tnames: Vec<(String, String)>,
    pub warnings: Vec<String>,
}

impl TestbenchBundle {
    pub fn files(&self) -> impl Iterator<Item = &GeneratedFile> {
        std::iter::once(&self.property_module)
            .chain(self.linked_modules.iter())
            .chain(std::iter::once(&self.bind_file))
            .chain(self.tool_files.iter())
    }

    /// Writes the bundle under `<outdir>/<dut>/` and returns the written paths.
    pub fn write_to(&self, outdir: &Path) -> io::Result<Vec<PathBuf>> {
        let dir = outdir.join(&self.dut);
        fs::create_dir_all(&dir)?;
        let mut written = Vec::new();
        for f in self.files() {
            let path = dir.join(&f.name);
            fs::write(&path, &f.text)?;
            written.push(path);
        }
        Ok(written)
    }
}

fn basename(path: &str) -> &str {
    Path::new(path)
        .file_name()
        .and_then(|s| s.to_str())
        .unwrap_or(path)
}

fn header(out: &mut String, comment: &str, pm: &ParsedModule) {
    let _ = writeln!(
        out,
        "{comment} Generated by autoft from {}. Do not edit.",
        basename(&pm.file)
    );
}

fn decl_type(width_expr: &str, type_name: Option<&str>) -> String {
    match type_name {
        Some(t) => t.to_string(),
        None if width_expr.is_empty() => "wire".into(),
        None => format!("wire {width_expr}"),
    }
}

fn write_property(out: &mut String, indent: &str, p: &GeneratedProperty, gated: bool) {
    let kw = p.directive.keyword();
    if p.directive == Directive::Assume && gated {
        let _ = writeln!(
            out,
            "{indent}generate if (ASSERT_INPUTS) begin : g_{}",
            p.name
        );
        let _ = writeln!(
            out,
            "{indent}  {}: assert property ({});",
            p.name, p.ltl_text
        );
        let _ = writeln!(out, "{indent}end else begin : g_{}", p.name);
        let _ = writeln!(
            out,
            "{indent}  {}: assume property ({});",
            p.name, p.ltl_text
        );
        let _ = writeln!(out, "{indent}end endgenerate");
    } else {
        let _ = writeln!(out, "{indent}{}: {kw} property ({});", p.name, p.ltl_text);
    }
}

fn write_aux(out: &mut String, aux: &TxnAux, clk: &str, rst: &str) {
    for s in &aux.signals {
        match &s.rule {
            AuxRule::Wire(_) => {
                let _ = writeln!(
                    out,
                    "  {} {} = {};",
                    decl_type(&s.width_expr, None),
                    s.name,
                    s.update_expr
                );
            }
            AuxRule::Symbolic => {
                let w = if s.width_expr.is_empty() {
                    String::new()
                } else {
                    format!(" {}", s.width_expr)
                };
                let _ = writeln!(out, "  (* anyconst *) reg{w} {};", s.name);
                let _ = writeln!(
                    out,
                    "  {}_stable: assume property ($stable({}));",
                    s.name, s.name
                );
            }
            AuxRule::Counter { .. } | AuxRule::Inflight { .. } | AuxRule::Sample { .. } => {
                if s.kind == AuxKind::CounterReg {
                    let _ = writeln!(
                        out,
                        "  localparam {} = $clog2({} + 1);",
                        aux.width_param, aux.max_param
                    );
                }
                let w = if s.width_expr.is_empty() {
                    String::new()
                } else {
                    format!(" {}", s.width_expr)
                };
                let _ = writeln!(out, "  reg{w} {};", s.name);
                let _ = writeln!(out, "  always_ff @(posedge {clk}) begin");
                let _ = writeln!(out, "    if ({rst}) {} <= {};", s.name, s.init_expr);
                let _ = writeln!(out, "    else {} <= {};", s.name, s.update_expr);
                let _ = writeln!(out, "  end");
            }
        }
    }
}

/// The `<dut>_prop` module.
pub fn emit_property_module(tb: &Testbench, opts: &EmitOptions, mode: &LinkMode) -> GeneratedFile {
    let pm = &tb.pm;
    let props = apply_link_transforms(&tb.properties, mode, opts.assert_inputs);
    let gated = !opts.assert_inputs && *mode != LinkMode::AssertAll;
    let mut out = String::new();
    header(&mut out, "//", pm);
    let _ = write!(out, "module {}_prop", pm.module_name);

    let mut params: Vec<String> = pm
        .parameters
        .iter()
        .map(|p| {
            let kw = if p.local { "localparam" } else { "parameter" };
            let mut s = format!("  {kw} ");
            if !p.type_text.is_empty() {
                s.push_str(&p.type_text);
                s.push(' ');
            }
            s.push_str(&p.name);
            if !p.value_expr.is_empty() {
                let _ = write!(s, " = {}", p.value_expr);
            }
            s
        })
        .collect();
    params.push(format!("  parameter ASSERT_INPUTS = {}", u8::from(!gated)));
    for a in &tb.aux.txns {
        params.push(format!(
            "  parameter {} = {}",
            a.max_param, a.max_outstanding
        ));
    }
    let _ = writeln!(out, " #(\n{}\n) (", params.join(",\n"));

    let mut ports: Vec<String> = Vec::new();
    let mut port_names: BTreeSet<&str> = BTreeSet::new();
    for s in &pm.signals {
        port_names.insert(&s.name);
        ports.push(format!(
            "  input {} {}",
            decl_type(&s.width_expr, s.type_name.as_deref()),
            s.name
        ));
    }
    // Explicitly declared attributes are DUT signals outside the port list.
    let mut wires: BTreeMap<String, String> = BTreeMap::new();
    let mut wire_order: Vec<String> = Vec::new();
    for t in &tb.transactions {
        for b in t.bindings() {
            match &b.source {
                BindingSource::ExplicitDecl(name) => {
                    if port_names.insert(name) {
                        ports.push(format!(
                            "  input {} {name}",
                            decl_type(&b.width_expr, b.type_name.as_deref())
                        ));
                    }
                }
                BindingSource::ExplicitAssign(expr) => {
                    if !wires.contains_key(&b.signal) {
                        let text = match &b.type_name {
                            Some(ty) => {
                                format!("  {ty} {};\n  assign {} = {expr};", b.signal, b.signal)
                            }
                            None => format!(
                                "  {} {} = {expr};",
                                decl_type(&b.width_expr, None),
                                b.signal
                            ),
                        };
                        wires.insert(b.signal.clone(), text);
                        wire_order.push(b.signal.clone());
                    }
                }
                BindingSource::Implicit(_) => {}
            }
        }
    }
    for name in [&opts.clk, &opts.rst] {
        if !tb.transactions.is_empty() && port_names.insert(name) {
            ports.push(format!("  input wire {name}"));
        }
    }
    let _ = writeln!(out, "{}", ports.join(",\n"));
    out.push_str(");\n");

    if !tb.transactions.is_empty() {
        let rst = opts.reset_expr();
        out.push('\n');
        let _ = writeln!(
            out,
            "  default clocking cb @(posedge {}); endclocking",
            opts.clk
        );
        let _ = writeln!(out, "  default disable iff ({rst});");
        if !wire_order.is_empty() {
            out.push_str("\n  // Attributes\n");
            for w in &wire_order {
                out.push_str(&wires[w]);
                out.push('\n');
            }
        }
        for (t, aux) in tb.transactions.iter().zip(&tb.aux.txns) {
            let _ = writeln!(
                out,
                "\n  // {}: {} {} {}",
                t.tname,
                t.p.name,
                t.direction.arrow(),
                t.q.name
            );
            write_aux(&mut out, aux, &opts.clk, &rst);
            out.push('\n');
            let mine: Vec<&GeneratedProperty> =
                props.iter().filter(|p| p.tname == t.tname).collect();
            for p in mine.iter().filter(|p| p.guard.is_none()) {
                write_property(&mut out, "  ", p, gated);
            }
            let guarded: Vec<_> = mine.iter().filter(|p| p.guard.is_some()).collect();
            if !guarded.is_empty() {
                let _ = writeln!(out, "`ifdef {}", guarded[0].guard.unwrap().macro_name());
                for p in guarded {
                    write_property(&mut out, "  ", p, gated);
                }
                out.push_str("`endif\n");
            }
        }
    }
    out.push_str("endmodule\n");
    GeneratedFile {
        name: format!("{}_prop.sv", pm.module_name),
        text: out,
    }
}

fn bind_line(pm: &ParsedModule) -> String {
    let overrides: Vec<String> = pm
        .parameters
        .iter()
        .filter(|p| !p.local)
        .map(|p| format!(".{}({})", p.name, p.name))
        .collect();
    let params = if overrides.is_empty() {
        String::new()
    } else {
        format!(" #({})", overrides.join(", "))
    };
    let dut = &pm.module_name;
    format!("bind {dut} {dut}_prop{params} {dut}_prop_i (.*);\n")
}

/// Bind unit attaching `<dut>_prop` to every instance of the DUT.
pub fn emit_bind_file(pm: &ParsedModule) -> GeneratedFile {
    let mut out = String::new();
    header(&mut out, "//", pm);
    out.push_str(&bind_line(pm));
    GeneratedFile {
        name: format!("{}_bind.svh", pm.module_name),
        text: out,
    }
}

struct Sources {
    /// Paths as listed in tool scripts: RTL files, then property files.
    rtl: Vec<String>,
    props: Vec<String>,
}

fn datapath_signals(tb_txns: &[Transaction]) -> Vec<String> {
    let mut seen = BTreeSet::new();
    tb_txns
        .iter()
        .flat_map(|t| [&t.p, &t.q])
        .filter_map(|s| s.get(Suffix::Data))
        .map(|b| b.signal.clone())
        .filter(|s| seen.insert(s.clone()))
        .collect()
}

fn jasper_tcl(
    pm: &ParsedModule,
    txns: &[Transaction],
    src: &Sources,
    opts: &EmitOptions,
) -> String {
    let mut out = String::new();
    header(&mut out, "#", pm);
    out.push_str("clear -all\n");
    for f in &src.rtl {
        let _ = writeln!(out, "analyze -sv12 {f}");
    }
    let _ = writeln!(out, "analyze -sv12 {}", src.props.join(" "));
    let _ = writeln!(out, "elaborate -top {}", pm.module_name);
    let _ = writeln!(out, "clock {}", opts.clk);
    let _ = writeln!(out, "reset -expression {}", opts.reset_expr());
    let data = datapath_signals(txns);
    out.push_str("# Datapath ignore template, adapt to the installed tool version:\n");
    if data.is_empty() {
        out.push_str("# <datapath-ignore directive> {}\n");
    } else {
        let _ = writeln!(out, "# <datapath-ignore directive> {{{}}}", data.join(" "));
    }
    out.push_str("prove -all\n");
    out
}

fn sby(pm: &ParsedModule, src: &Sources, opts: &EmitOptions) -> String {
    let mut out = String::new();
    header(&mut out, "#", pm);
    out.push_str("[tasks]\nprove\nlive\n\n[options]\n");
    let depth = opts.bounded.map_or(20, |n| n.max(1) + 4);
    let _ = writeln!(
        out,
        "prove: mode prove\nprove: depth {depth}\nlive: mode live"
    );
    out.push_str("\n[engines]\nprove: smtbmc\nlive: aiger suprove\n\n[script]\n");
    for f in src.rtl.iter().chain(&src.props) {
        let _ = writeln!(out, "read -formal {}", basename(f));
    }
    let _ = writeln!(out, "prep -top {}", pm.module_name);
    out.push_str("\n[files]\n");
    for f in src.rtl.iter().chain(&src.props) {
        let _ = writeln!(out, "{f}");
    }
    out
}

fn tool_files(
    pm: &ParsedModule,
    txns: &[Transaction],
    src: &Sources,
    opts: &EmitOptions,
) -> Vec<GeneratedFile> {
    let mut tools = opts.tools.clone();
    tools.dedup();
    tools
        .into_iter()
        .map(|tool| match tool {
            Tool::JasperGold => GeneratedFile {
                name: format!("{}.tcl", pm.module_name),
                text: jasper_tcl(pm, txns, src, opts),
            },
            Tool::SymbiYosys => GeneratedFile {
                name: format!("{}.sby", pm.module_name),
                text: sby(pm, src, opts),
            },
        })
        .collect()
}

fn own_sources(pm: &ParsedModule, opts: &EmitOptions) -> Sources {
    let rtl = opts
        .rtl_path
        .clone()
        .unwrap_or_else(|| basename(&pm.file).to_string());
    let dut = &pm.module_name;
    Sources {
        rtl: vec![rtl],
        props: vec![format!("{dut}_prop.sv"), format!("{dut}_bind.svh")],
    }
}

/// Tool scripts for the requested tools.
pub fn emit_tool_files(tb: &Testbench, opts: &EmitOptions) -> Vec<GeneratedFile> {
    tool_files(&tb.pm, &tb.transactions, &own_sources(&tb.pm, opts), opts)
}

/// Renders a complete bundle for one module.
pub fn emit_bundle(tb: &Testbench, opts: &EmitOptions) -> TestbenchBundle {
    TestbenchBundle {
        dut: tb.dut().to_string(),
        property_module: emit_property_module(tb, opts, &LinkMode::Standalone),
        bind_file: emit_bind_file(&tb.pm),
        tool_files: emit_tool_files(tb, opts),
        linked_modules: Vec::new(),
        properties: apply_link_transforms(
            &tb.properties,
            &LinkMode::Standalone,
            opts.assert_inputs,
        ),
        tnames: tb
            .transactions
            .iter()
            .map(|t| (t.tname.clone(), tb.dut().to_string()))
            .collect(),
        warnings: tb.warnings.iter().map(|w| w.to_string()).collect(),
    }
}

/// Builds and renders the bundle for a parsed module.
pub fn generate(pm: &ParsedModule, opts: &EmitOptions) -> Result<TestbenchBundle, TxnErrors> {
    Ok(emit_bundle(&Testbench::build(pm, opts)?, opts))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LinkFlags {
    /// Include the submodule's properties in the parent testbench.
    pub am: bool,
    /// Check the submodule's assumptions as assertions.
    pub as_: bool,
}

pub struct LinkedChild<'a> {
    pub tb: &'a Testbench,
    pub flags: LinkFlags,
    /// Path of the child RTL as written into tool scripts.
    pub rtl_path: Option<String>,
}

/// Adds submodule property modules to a parent bundle.
pub fn link_submodule_fts(
    parent: &Testbench,
    children: &[LinkedChild<'_>],
    opts: &EmitOptions,
) -> Result<TestbenchBundle, EmitError> {
    let mut bundle = emit_bundle(parent, opts);
    let mut owner: BTreeMap<String, String> = BTreeMap::new();
    for (t, m) in &bundle.tnames {
        owner.insert(t.clone(), m.clone());
    }
    for c in children {
        for t in &c.tb.transactions {
            if let Some(first) = owner.get(&t.tname) {
                return Err(EmitError::DuplicateTransactionName {
                    tname: t.tname.clone(),
                    first: first.clone(),
                    second: c.tb.dut().to_string(),
                });
            }
            owner.insert(t.tname.clone(), c.tb.dut().to_string());
        }
    }
    let included: Vec<&LinkedChild<'_>> = children.iter().filter(|c| c.flags.am).collect();
    if included.is_empty() {
        return Ok(bundle);
    }
    let mut rtl: Vec<String> = Vec::new();
    let mut props: Vec<String> = Vec::new();
    for c in &included {
        let scope = LinkMode::AsSubmodule(c.tb.dut().to_string());
        let mut child_opts = opts.clone();
        child_opts.assert_inputs = opts.assert_inputs || c.flags.as_;
        let mut file = emit_property_module(c.tb, &child_opts, &scope);
        if c.flags.as_ {
            file.text = file
                .text
                .replace("parameter ASSERT_INPUTS = 0", "parameter ASSERT_INPUTS = 1");
        }
        props.push(file.name.clone());
        bundle.linked_modules.push(file);
        bundle.bind_file.text.push_str(&bind_line(&c.tb.pm));
        let mut scoped = apply_link_transforms(&c.tb.properties, &scope, child_opts.assert_inputs);
        bundle.properties.append(&mut scoped);
        bundle.tnames.extend(
            c.tb.transactions
                .iter()
                .map(|t| (t.tname.clone(), c.tb.dut().to_string())),
        );
        bundle
            .warnings
            .extend(c.tb.warnings.iter().map(|w| w.to_string()));
        rtl.push(
            c.rtl_path
                .clone()
                .unwrap_or_else(|| basename(&c.tb.pm.file).to_string()),
        );
    }
    let mut src = own_sources(&parent.pm, opts);
    src.rtl.extend(rtl);
    // Property modules must be read before the bind file that instantiates them.
    src.props.splice(1..1, props);
    let mut all_txns = parent.transactions.clone();
    for c in &included {
        all_txns.extend(c.tb.transactions.iter().cloned());
    }
    bundle.tool_files = tool_files(&parent.pm, &all_txns, &src, opts);
    Ok(bundle)
}

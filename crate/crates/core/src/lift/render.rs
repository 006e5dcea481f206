//! Pseudocode serialization. One statement per line, `call
//! [addr].name(args…) with:` followed by an indented `args` line, `if
//! <expr>:` blocks with two-space indentation, and loops printed as
//! `for i in 0..k:` with divergent value tables rendered as inline arrays.
//!
//! Minimal mode drops bookkeeping (variable assigns, raw memory writes,
//! guard checks) to match the attack-focused style; full mode shows
//! everything.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::abi::{decode_calldata, type_tuple};
use crate::compress::{LeafParam, LoopTemplate, Slot};
use crate::databases::SelectorDb;
use crate::opcode::Op;
use crate::primitives::{DisplayWord, U256};

use super::expr::{Concrete, Expr, PairedValue};
use super::stmt::{CallKind, LeafKind, PseudoStmt};

#[derive(Debug, Clone, Copy, Default)]
pub struct RenderOptions {
    /// Drop assigns, raw memory writes, and guard conditions.
    pub minimal: bool,
}

struct Ctx<'a> {
    db: &'a SelectorDb,
    opts: RenderOptions,
    /// Sentinel word → replacement text, used when rendering loop templates.
    sentinels: BTreeMap<U256, String>,
    arr_counter: usize,
}

/// Serialize statements with the given selector database.
pub fn render_pseudocode(stmts: &[PseudoStmt], db: &SelectorDb, opts: RenderOptions) -> String {
    let mut ctx = Ctx {
        db,
        opts,
        sentinels: BTreeMap::new(),
        arr_counter: 0,
    };
    let mut out = String::new();
    render_block(&mut ctx, stmts, 0, &mut out);
    out
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn render_block(ctx: &mut Ctx, stmts: &[PseudoStmt], level: usize, out: &mut String) {
    for s in stmts {
        render_stmt(ctx, s, level, out);
    }
}

fn render_stmt(ctx: &mut Ctx, s: &PseudoStmt, level: usize, out: &mut String) {
    match s {
        PseudoStmt::Assign { var, value, .. } => {
            if ctx.opts.minimal {
                return;
            }
            indent(out, level);
            let _ = writeln!(out, "v{var} = {}", expr_str(ctx, value));
        }
        PseudoStmt::MemWrite { offset, len, value, .. } => {
            if ctx.opts.minimal {
                return;
            }
            indent(out, level);
            let _ = writeln!(
                out,
                "MEM[{offset}..{}] = {}",
                offset + len,
                expr_str(ctx, value)
            );
        }
        PseudoStmt::StorageWrite { transient, slot, value, .. } => {
            indent(out, level);
            let space = if *transient { "TSTORAGE" } else { "STORAGE" };
            let _ = writeln!(out, "{space}[{}] = {}", expr_str(ctx, slot), expr_str(ctx, value));
        }
        PseudoStmt::ExternalCall { kind, target, value, input, .. } => {
            indent(out, level);
            let prefix = match kind {
                CallKind::Call => "call",
                CallKind::StaticCall => "static call",
                CallKind::DelegateCall => "delegate call",
                CallKind::CallCode => "callcode",
            };
            let target_str = expr_str(ctx, target);
            let (decl, args) = describe_call(ctx, input);
            let value_suffix = match value {
                Some(v) if !matches!(&v.expr, Expr::Const(c) if c.is_zero()) => {
                    format!(" value {}", expr_str(ctx, v))
                }
                _ => String::new(),
            };
            match args {
                Some(args) if !args.is_empty() => {
                    let _ = writeln!(out, "{prefix} [{target_str}].{decl} with:{value_suffix}");
                    indent(out, level + 1);
                    let _ = writeln!(out, "args {}", args.join(", "));
                }
                _ => {
                    let _ = writeln!(out, "{prefix} [{target_str}].{decl}{value_suffix}");
                }
            }
        }
        PseudoStmt::Create { create2, value, salt, created, .. } => {
            indent(out, level);
            let kw = if *create2 { "create2" } else { "create" };
            let addr = created
                .map(|a| crate::primitives::checksum_address(&a))
                .unwrap_or_else(|| "<unknown>".to_string());
            let mut line = format!("{kw} [{addr}]");
            if !matches!(&value.expr, Expr::Const(c) if c.is_zero()) {
                let _ = write!(line, " value {}", expr_str(ctx, value));
            }
            if let Some(s) = salt {
                let _ = write!(line, " salt {}", expr_str(ctx, s));
            }
            let _ = writeln!(out, "{line}");
        }
        PseudoStmt::IfTaken { cond, body, .. } => {
            if body.is_empty() {
                // guard check
                if ctx.opts.minimal {
                    return;
                }
                indent(out, level);
                let _ = writeln!(out, "if {}: pass", cond_str(ctx, cond));
                return;
            }
            indent(out, level);
            let _ = writeln!(out, "if {}:", cond_str(ctx, cond));
            render_block(ctx, body, level + 1, out);
        }
        PseudoStmt::Loop(tpl) => render_loop(ctx, tpl, level, out),
        PseudoStmt::Log { topics, data, .. } => {
            indent(out, level);
            let t: Vec<String> = topics.iter().map(|t| expr_str(ctx, t)).collect();
            let _ = writeln!(out, "emit log({}, data={})", t.join(", "), expr_str(ctx, data));
        }
        PseudoStmt::Return { data, .. } => {
            indent(out, level);
            match data {
                Some(d) => {
                    let _ = writeln!(out, "return {}", expr_str(ctx, d));
                }
                None => {
                    let _ = writeln!(out, "return");
                }
            }
        }
        PseudoStmt::Revert { data, .. } => {
            indent(out, level);
            match data {
                Some(d) => {
                    let _ = writeln!(out, "revert {}", expr_str(ctx, d));
                }
                None => {
                    let _ = writeln!(out, "revert");
                }
            }
        }
        PseudoStmt::SelfDestruct { beneficiary, .. } => {
            indent(out, level);
            let _ = writeln!(out, "selfdestruct({})", expr_str(ctx, beneficiary));
        }
    }
}

/// Sentinel values substituted into loop-template leaves so the renderer can
/// print `arr1[i]` or `(base + stride*i)` at exactly the varying positions.
fn sentinel_base() -> U256 {
    U256::from_big_endian(crate::primitives::keccak256(b"loop-template-slot").as_bytes())
}

fn render_loop(ctx: &mut Ctx, tpl: &LoopTemplate<PseudoStmt>, level: usize, out: &mut String) {
    let mut arrays: Vec<(String, Vec<U256>)> = Vec::new();
    let mut display: Vec<PseudoStmt> = Vec::with_capacity(tpl.slots.len());
    let mut sentinel_counter = 0u64;

    for slot in &tpl.slots {
        match slot {
            Slot::Invariant(item) => display.push(item.clone()),
            Slot::Parametric { first, leaves } => {
                let mut item = first.clone();
                let mut ordinal = 0usize;
                item.for_each_leaf(&mut |kind, v| {
                    let param = &leaves[ordinal];
                    ordinal += 1;
                    // only value positions rendered through DisplayWord can
                    // show a parameterized form
                    let displayable =
                        matches!(kind, LeafKind::ConstVal | LeafKind::ConcreteWord);
                    if !displayable || param.is_invariant() {
                        return;
                    }
                    let sentinel = sentinel_base().overflowing_add(U256::from(sentinel_counter)).0;
                    sentinel_counter += 1;
                    match param {
                        LeafParam::Affine { base, stride } => {
                            let text = if base.is_zero() {
                                format!("{}*{}", DisplayWord(stride), tpl.index_var)
                            } else {
                                format!(
                                    "({} + {}*{})",
                                    DisplayWord(base),
                                    DisplayWord(stride),
                                    tpl.index_var
                                )
                            };
                            ctx.sentinels.insert(sentinel, text);
                            *v = sentinel;
                        }
                        LeafParam::Table(values) => {
                            ctx.arr_counter += 1;
                            let name = format!("arr{}", ctx.arr_counter);
                            ctx.sentinels
                                .insert(sentinel, format!("{name}[{}]", tpl.index_var));
                            arrays.push((name, values.clone()));
                            *v = sentinel;
                        }
                    }
                });
                display.push(item);
            }
        }
    }

    for (name, values) in &arrays {
        indent(out, level);
        let vals: Vec<String> = values.iter().map(|v| DisplayWord(v).to_string()).collect();
        let _ = writeln!(out, "{name} = [{}]", vals.join(", "));
    }
    indent(out, level);
    let _ = writeln!(out, "for {} in 0..{}:", tpl.index_var, tpl.iterations);
    render_block(ctx, &display, level + 1, out);
}

/// Function part of a call line: `name(signature)` plus rendered arguments.
fn describe_call(ctx: &mut Ctx, input: &PairedValue) -> (String, Option<Vec<String>>) {
    let bytes = match input.concrete.as_bytes() {
        Some(b) => b,
        None => return (format!("func_unknown({})", expr_str(ctx, input)), None),
    };
    if bytes.is_empty() {
        return ("fallback()".to_string(), None);
    }
    let Some(decoded) = decode_calldata(&bytes) else {
        return (
            "fallback()".to_string(),
            Some(vec![format!("0x{}", hex::encode(&bytes))]),
        );
    };
    let decl = match ctx.db.lookup(&decoded.selector) {
        Some(sig) => sig.signature.clone(),
        None => format!(
            "func_{}{}",
            hex::encode(decoded.selector),
            type_tuple(&decoded.params)
        ),
    };
    if decoded.params.is_empty() {
        return (decl, None);
    }

    // map each head word back to the memory part that produced it, when one
    // aligns exactly; fall back to the concrete word otherwise
    let parts = flatten_parts(input);
    let args: Vec<String> = decoded
        .params
        .iter()
        .map(|p| {
            if let Some(tail) = &p.tail {
                // tail payload begins after the length word at 4 + offset
                let tail_pos = 4 + p.word.low_u64() + 32;
                return render_dynamic_arg(ctx, &parts, tail_pos, tail);
            }
            match aligned_part(&parts, p.head_offset as u64, 32) {
                Some(pv) => expr_str(ctx, pv),
                None => DisplayWord(&p.word).to_string(),
            }
        })
        .collect();
    (decl, Some(args))
}

/// Flatten a call-input expression into (offset, len, part) triples.
fn flatten_parts(input: &PairedValue) -> Vec<(u64, u64, &PairedValue)> {
    let mut out = Vec::new();
    fn walk<'a>(pv: &'a PairedValue, offset: u64, out: &mut Vec<(u64, u64, &'a PairedValue)>) {
        match (&pv.expr, pv.concrete.byte_len()) {
            (Expr::Concat { parts }, _) => {
                let mut cur = offset;
                for p in parts {
                    let len = p.concrete.byte_len().unwrap_or(0) as u64;
                    walk(p, cur, out);
                    cur += len;
                }
            }
            (_, Some(len)) => out.push((offset, len as u64, pv)),
            (_, None) => {}
        }
    }
    walk(input, 0, &mut out);
    out
}

fn aligned_part<'a>(
    parts: &[(u64, u64, &'a PairedValue)],
    offset: u64,
    len: u64,
) -> Option<&'a PairedValue> {
    parts
        .iter()
        .find(|(o, l, _)| *o == offset && *l == len)
        .map(|(_, _, pv)| *pv)
}

/// Dynamic `bytes` argument: word-aligned tails built from whole words
/// render as `abi.encode(...)`, anything else as raw hex.
fn render_dynamic_arg(
    ctx: &mut Ctx,
    parts: &[(u64, u64, &PairedValue)],
    tail_pos: u64,
    tail: &[u8],
) -> String {
    if !tail.is_empty() && tail.len() % 32 == 0 {
        let mut words = Vec::with_capacity(tail.len() / 32);
        for w in 0..tail.len() / 32 {
            let off = tail_pos + (w as u64) * 32;
            match aligned_part(parts, off, 32) {
                Some(pv) => words.push(expr_str(ctx, pv)),
                None => {
                    let word = U256::from_big_endian(&tail[w * 32..w * 32 + 32]);
                    words.push(DisplayWord(&word).to_string());
                }
            }
        }
        return format!("abi.encode({})", words.join(", "));
    }
    format!("0x{}", hex::encode(tail))
}

/// Render a branch condition: comparisons invert cleanly under negation.
fn cond_str(ctx: &mut Ctx, pv: &PairedValue) -> String {
    match &pv.expr {
        Expr::Unary(Op::Iszero, inner) => match &inner.expr {
            Expr::Binary(Op::Eq, a, b) => {
                format!("{} != {}", expr_str(ctx, a), expr_str(ctx, b))
            }
            Expr::Binary(Op::Lt, a, b) => {
                format!("{} >= {}", expr_str(ctx, a), expr_str(ctx, b))
            }
            Expr::Binary(Op::Gt, a, b) => {
                format!("{} <= {}", expr_str(ctx, a), expr_str(ctx, b))
            }
            Expr::Binary(Op::Slt, a, b) => {
                format!("{} >= {}", expr_str(ctx, a), expr_str(ctx, b))
            }
            Expr::Binary(Op::Sgt, a, b) => {
                format!("{} <= {}", expr_str(ctx, a), expr_str(ctx, b))
            }
            Expr::Unary(Op::Iszero, innermost) => format!("bool({})", expr_str(ctx, innermost)),
            _ => format!("{} == 0", expr_str(ctx, inner)),
        },
        Expr::Binary(Op::Sub, a, b) => {
            format!("{} != {}", expr_str(ctx, a), expr_str(ctx, b))
        }
        Expr::Binary(Op::Eq, a, b) => {
            format!("{} == {}", expr_str(ctx, a), expr_str(ctx, b))
        }
        _ => expr_str(ctx, pv),
    }
}

fn word_str(ctx: &Ctx, w: &U256) -> String {
    if let Some(text) = ctx.sentinels.get(w) {
        return text.clone();
    }
    DisplayWord(w).to_string()
}

fn concrete_str(ctx: &Ctx, pv: &PairedValue) -> String {
    match &pv.concrete {
        Concrete::Word(w) => word_str(ctx, w),
        Concrete::Bytes(b) => format!("0x{}", hex::encode(b)),
        Concrete::Unknown => "<unknown>".to_string(),
    }
}

fn expr_str(ctx: &mut Ctx, pv: &PairedValue) -> String {
    match &pv.expr {
        Expr::Const(v) => word_str(ctx, v),
        Expr::SelfAddr => "address(this)".to_string(),
        Expr::Origin => "tx.origin".to_string(),
        Expr::Caller => "msg.sender".to_string(),
        Expr::CallValue => "msg.value".to_string(),
        // calldata is known attack input: show the observed value
        Expr::CalldataWord { .. } | Expr::CalldataRange { .. } => concrete_str(ctx, pv),
        Expr::CalldataSize => "msg.data.length".to_string(),
        Expr::ReturnData { offset, len, .. } => {
            if offset % 32 == 0 && *len == 32 {
                format!("ext_call.return_data[{}]", offset / 32)
            } else {
                format!("ext_call.return_data[{}..{}]", offset, offset + len)
            }
        }
        Expr::CallSuccess { .. } => "ext_call.success".to_string(),
        Expr::CreatedAddress { .. } => concrete_str(ctx, pv),
        Expr::Storage { slot, transient } => {
            let space = if *transient { "TSTORAGE" } else { "STORAGE" };
            format!("{space}[{}]", expr_str(ctx, slot))
        }
        Expr::Keccak { parts } => {
            let inner: Vec<String> = parts.iter().map(|p| expr_str(ctx, p)).collect();
            format!("sha3({})", inner.join(", "))
        }
        Expr::Concat { parts } => {
            if parts
                .iter()
                .all(|p| matches!(p.expr, Expr::Const(_) | Expr::Mem0))
            {
                concrete_str(ctx, pv)
            } else {
                let inner: Vec<String> = parts.iter().map(|p| expr_str(ctx, p)).collect();
                format!("concat({})", inner.join(", "))
            }
        }
        Expr::Slice { of, offset, len } => {
            format!("{}[{}..{}]", expr_str(ctx, of), offset, offset + len)
        }
        Expr::Mem0 => "0".to_string(),
        Expr::CodeSlice { addr, offset, len } => {
            let target = match addr {
                Some(a) => expr_str(ctx, a),
                None => "this".to_string(),
            };
            format!("code({target})[{}..{}]", offset, offset + len)
        }
        Expr::Env(op) => format!("{op}()"),
        Expr::Var(id) => format!("v{id}"),
        Expr::AddressCast(inner) => format!("address({})", expr_str(ctx, inner)),
        Expr::Unary(op, a) => match op {
            Op::Iszero => cond_str(ctx, pv),
            Op::Not => format!("~{}", operand_str(ctx, a)),
            _ => format!("{}({})", lower_op(*op), expr_str(ctx, a)),
        },
        Expr::Binary(op, a, b) => {
            let sym = match op {
                Op::Add => "+",
                Op::Sub => "-",
                Op::Mul => "*",
                Op::Div | Op::Sdiv => "/",
                Op::Mod | Op::Smod => "%",
                Op::Exp => "**",
                Op::Lt | Op::Slt => "<",
                Op::Gt | Op::Sgt => ">",
                Op::Eq => "==",
                Op::And => "&",
                Op::Or => "|",
                Op::Xor => "^",
                Op::Shl => "<<",
                Op::Shr | Op::Sar => ">>",
                _ => {
                    return format!(
                        "{}({}, {})",
                        lower_op(*op),
                        expr_str(ctx, a),
                        expr_str(ctx, b)
                    )
                }
            };
            // shifts take the shift amount as the first operand
            if matches!(op, Op::Shl | Op::Shr | Op::Sar) {
                format!("{} {} {}", operand_str(ctx, b), sym, operand_str(ctx, a))
            } else {
                format!("{} {} {}", operand_str(ctx, a), sym, operand_str(ctx, b))
            }
        }
        Expr::Ternary(op, a, b, c) => format!(
            "{}({}, {}, {})",
            lower_op(*op),
            expr_str(ctx, a),
            expr_str(ctx, b),
            expr_str(ctx, c)
        ),
    }
}

/// Operand position: parenthesize compound expressions.
fn operand_str(ctx: &mut Ctx, pv: &PairedValue) -> String {
    let s = expr_str(ctx, pv);
    match &pv.expr {
        Expr::Binary(..) | Expr::Ternary(..) => format!("({s})"),
        _ => s,
    }
}

fn lower_op(op: Op) -> String {
    op.to_string().to_lowercase()
}

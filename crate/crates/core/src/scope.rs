//! Hierarchical call graph, attack-scope localization, and per-function
//! instruction extraction.
//!
//! The scope is the least fixed point of three expansion rules: all executed
//! functions of the initial recipient, contracts it (or its descendants)
//! deployed dynamically, and functions executed via delegation from a scope
//! contract.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cefg::{BlockRef, Cefg, NodeKey};
use crate::opcode::Op;
use crate::primitives::{selector_of, Address, CalldataRef, U256};
use crate::trace::{tags, TraceStream};

#[derive(Debug, Error)]
pub enum ScopeError {
    #[error("initial recipient {0:?} never executes; nothing to localize")]
    EmptyScope(Address),
}

/// Functional execution context, uniquely identified by
/// ⟨address, depth, input⟩.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CgKey {
    pub address: Address,
    pub depth: u32,
    pub input: CalldataRef,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CallGraphNode {
    pub key: CgKey,
    pub selector: Option<[u8; 4]>,
    /// Storage context the code executes in (differs from `key.address`
    /// for delegated calls).
    pub context_address: Address,
    /// msg.sender observed for this context.
    pub msg_sender: Address,
    /// msg.value observed for this context.
    pub msg_value: U256,
    /// Child invocations in first-occurrence order, with the edge call type.
    pub children: Vec<(Op, usize)>,
    /// Backing cEFG nodes (one per call_type variant).
    pub cefg_nodes: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CallGraph {
    pub nodes: Vec<CallGraphNode>,
    pub root: usize,
}

impl CallGraph {
    pub fn find(&self, key: &CgKey) -> Option<usize> {
        self.nodes.iter().position(|n| n.key == *key)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    DirectInvocation,
    DynamicInstantiation,
    ContextDelegation,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttackScope {
    /// Adversary-related contract addresses, in discovery order.
    pub contracts: Vec<(Address, Provenance)>,
    /// In-scope call-graph nodes, in discovery order.
    pub functions: Vec<(usize, Provenance)>,
}

impl AttackScope {
    pub fn contains_contract(&self, a: &Address) -> bool {
        self.contracts.iter().any(|(c, _)| c == a)
    }

    pub fn contains_function(&self, id: usize) -> bool {
        self.functions.iter().any(|(f, _)| *f == id)
    }
}

/// Complete instruction stream of one in-scope function.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FunctionTrace {
    pub owner: usize,
    pub key: CgKey,
    pub selector: Option<[u8; 4]>,
    pub context_address: Address,
    pub msg_sender: Address,
    pub msg_value: U256,
    /// How the function was first invoked.
    pub entry_kind: Op,
    /// Instruction blocks in execution order, reverted ones flagged.
    pub blocks: Vec<BlockRef>,
}

impl FunctionTrace {
    /// Program counters of every non-reverted instruction, in order.
    pub fn pc_sequence(&self, stream: &TraceStream) -> Vec<u64> {
        let mut pcs = Vec::new();
        for b in self.blocks.iter().filter(|b| !b.reverted) {
            for i in b.start..b.end {
                pcs.push(stream.steps[i].step.pc);
            }
        }
        pcs
    }

    pub fn instruction_count(&self) -> usize {
        self.blocks.iter().map(|b| b.end - b.start).sum()
    }
}

/// Build the hierarchical call graph from the cEFG. One node per functional
/// context; edges labeled with the call type.
pub fn build_call_graph(cefg: &Cefg, stream: &TraceStream) -> CallGraph {
    let mut nodes: Vec<CallGraphNode> = Vec::new();
    let mut by_key: HashMap<CgKey, usize> = HashMap::new();
    let mut cefg_to_cg: HashMap<usize, usize> = HashMap::new();

    let intern = |nodes: &mut Vec<CallGraphNode>,
                      by_key: &mut HashMap<CgKey, usize>,
                      key: &NodeKey,
                      stream: &TraceStream|
     -> usize {
        let cg_key = CgKey {
            address: key.address,
            depth: key.depth,
            input: key.input,
        };
        if let Some(&id) = by_key.get(&cg_key) {
            return id;
        }
        let selector = selector_of(stream.input_bytes(&key.input));
        nodes.push(CallGraphNode {
            key: cg_key,
            selector,
            context_address: key.address,
            msg_sender: Address::zero(),
            msg_value: U256::zero(),
            children: Vec::new(),
            cefg_nodes: Vec::new(),
        });
        by_key.insert(cg_key, nodes.len() - 1);
        nodes.len() - 1
    };

    if cefg.nodes.is_empty() {
        return CallGraph { nodes, root: 0 };
    }

    let root_id = intern(&mut nodes, &mut by_key, &cefg.nodes[cefg.root].key, stream);
    nodes[root_id].msg_sender = stream.sender;
    nodes[root_id].msg_value = stream.root_value;
    cefg_to_cg.insert(cefg.root, root_id);
    nodes[root_id].cefg_nodes.push(cefg.root);

    for edge in &cefg.edges {
        if !edge.op.enters_context() {
            // return edges land back in an existing functional context
            let to_key = &cefg.nodes[edge.to].key;
            let id = intern(&mut nodes, &mut by_key, to_key, stream);
            if !nodes[id].cefg_nodes.contains(&edge.to) {
                nodes[id].cefg_nodes.push(edge.to);
            }
            cefg_to_cg.insert(edge.to, id);
            continue;
        }
        let parent = match cefg_to_cg.get(&edge.from) {
            Some(&p) => p,
            None => {
                let id = intern(&mut nodes, &mut by_key, &cefg.nodes[edge.from].key, stream);
                cefg_to_cg.insert(edge.from, id);
                id
            }
        };
        let child_key = &cefg.nodes[edge.to].key;
        let existed = by_key.contains_key(&CgKey {
            address: child_key.address,
            depth: child_key.depth,
            input: child_key.input,
        });
        let child = intern(&mut nodes, &mut by_key, child_key, stream);
        cefg_to_cg.insert(edge.to, child);
        if !nodes[child].cefg_nodes.contains(&edge.to) {
            nodes[child].cefg_nodes.push(edge.to);
        }
        if !nodes[parent].children.contains(&(edge.op, child)) {
            nodes[parent].children.push((edge.op, child));
        }
        if !existed {
            // first activation decides context/sender/value
            let call_step = &stream.steps[edge.step];
            let call_value = call_step.recorded_word(tags::VALUE).unwrap_or_default();
            match edge.op {
                Op::Delegatecall => {
                    nodes[child].context_address = nodes[parent].context_address;
                    nodes[child].msg_sender = nodes[parent].msg_sender;
                    nodes[child].msg_value = nodes[parent].msg_value;
                }
                Op::Callcode => {
                    nodes[child].context_address = nodes[parent].context_address;
                    nodes[child].msg_sender = nodes[parent].context_address;
                    nodes[child].msg_value = call_value;
                }
                _ => {
                    nodes[child].context_address = child_key.address;
                    nodes[child].msg_sender = nodes[parent].context_address;
                    nodes[child].msg_value = call_value;
                }
            }
        }
    }

    CallGraph {
        nodes,
        root: root_id,
    }
}

/// Compute the attack scope as the least fixed point of the three expansion
/// rules, by worklist traversal from the initial recipient.
pub fn localize_scope(cg: &CallGraph, a0: Address) -> Result<AttackScope, ScopeError> {
    if cg.nodes.is_empty() || !cg.nodes.iter().any(|n| n.key.address == a0) {
        return Err(ScopeError::EmptyScope(a0));
    }
    let mut scope = AttackScope {
        contracts: vec![(a0, Provenance::DirectInvocation)],
        functions: Vec::new(),
    };
    let mut contract_set: BTreeSet<Address> = [a0].into();
    let mut function_set: BTreeSet<usize> = BTreeSet::new();

    loop {
        let mut changed = false;

        // rule (i): all executed functions of scope contracts
        for (id, node) in cg.nodes.iter().enumerate() {
            if contract_set.contains(&node.key.address) && function_set.insert(id) {
                scope.functions.push((id, Provenance::DirectInvocation));
                changed = true;
            }
        }

        // rule (ii): dynamic instantiation by scope functions or descendants
        let roots: Vec<usize> = function_set.iter().copied().collect();
        for f in roots {
            let mut stack = vec![f];
            let mut seen = BTreeSet::new();
            while let Some(n) = stack.pop() {
                if !seen.insert(n) {
                    continue;
                }
                for &(op, child) in &cg.nodes[n].children {
                    if op.is_create() {
                        let created = cg.nodes[child].key.address;
                        if contract_set.insert(created) {
                            scope.contracts.push((created, Provenance::DynamicInstantiation));
                            changed = true;
                        }
                    }
                    stack.push(child);
                }
            }
        }

        // rule (iii): context delegation from scope contracts. CALLCODE also
        // runs foreign code in the caller's context, so it counts.
        for node in &cg.nodes {
            if !contract_set.contains(&node.context_address) {
                continue;
            }
            for &(op, child) in &node.children {
                if matches!(op, Op::Delegatecall | Op::Callcode) && function_set.insert(child) {
                    scope.functions.push((child, Provenance::ContextDelegation));
                    changed = true;
                }
            }
        }

        if !changed {
            break;
        }
    }
    Ok(scope)
}

/// Extract the complete instruction stream for each in-scope function,
/// blocks in execution order with bound values attached via the stream.
pub fn extract_instructions(
    scope: &AttackScope,
    cg: &CallGraph,
    cefg: &Cefg,
    stream: &TraceStream,
) -> Vec<FunctionTrace> {
    debug_assert!(stream.steps.len() >= cefg.nodes.iter().flat_map(|n| &n.ins).map(|b| b.end).max().unwrap_or(0));
    let mut out = Vec::new();
    for &(id, _) in &scope.functions {
        let node = &cg.nodes[id];
        let mut blocks: Vec<BlockRef> = Vec::new();
        let mut entry_kind = Op::Call;
        let mut first = true;
        for &cefg_id in &node.cefg_nodes {
            let cn = &cefg.nodes[cefg_id];
            if first {
                entry_kind = cn.key.call_type;
                first = false;
            }
            blocks.extend(cn.ins.iter().copied());
        }
        blocks.sort_by_key(|b| b.start);
        out.push(FunctionTrace {
            owner: id,
            key: node.key,
            selector: node.selector,
            context_address: node.context_address,
            msg_sender: node.msg_sender,
            msg_value: node.msg_value,
            entry_kind,
            blocks,
        });
    }
    out.sort_by_key(|ft| ft.blocks.first().map(|b| b.start).unwrap_or(usize::MAX));
    out
}

/// Text rendering of the call graph with in-scope nodes marked; used by the
/// `scope` CLI subcommand.
pub fn render_tree(cg: &CallGraph, scope: &AttackScope, names: &dyn Fn(&CallGraphNode) -> String) -> String {
    let mut out = String::new();
    if cg.nodes.is_empty() {
        return out;
    }
    fn walk(
        cg: &CallGraph,
        scope: &AttackScope,
        names: &dyn Fn(&CallGraphNode) -> String,
        id: usize,
        edge: Option<Op>,
        indent: usize,
        seen: &mut BTreeSet<usize>,
        out: &mut String,
    ) {
        let node = &cg.nodes[id];
        let marker = if scope.contains_function(id) { "*" } else { " " };
        let label = names(node);
        let edge_label = edge.map(|op| format!("{op} ")).unwrap_or_default();
        out.push_str(&format!("{}{} {}{}\n", " ".repeat(indent), marker, edge_label, label));
        if !seen.insert(id) {
            return;
        }
        for &(op, child) in &node.children {
            walk(cg, scope, names, child, Some(op), indent + 2, seen, out);
        }
    }
    let mut seen = BTreeSet::new();
    walk(cg, scope, names, cg.root, None, 0, &mut seen, &mut out);
    out
}

#[cfg(test)]
mod tests;

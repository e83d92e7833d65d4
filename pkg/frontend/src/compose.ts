/** Compose-state logic, kept free of DOM so it is directly testable.
 *
 * Invariants enforced here:
 *  - the outgoing draft always ends with the quoted original mail;
 *  - exactly one answer (proposal or manual category) is selected at submit;
 *  - submission carries the original mail text untouched, byte for byte;
 *  - marking a span replaces the active tab set with the span's proposals.
 */

import type { Mail, Proposal, SubmitAnswerRequest } from "./types.js";

export interface SpanEntry {
  start: number;
  end: number;
  proposals: Proposal[];
}

export interface Selection {
  categoryId: string;
  categoryName: string;
  template: string;
  source: "proposal" | "manual";
  rank: number | null;
}

export interface ComposeState {
  mail: Mail;
  /** proposals for the whole mail (null while degraded) */
  proposals: Proposal[] | null;
  /** marked spans, most recent last; the active one supplies the tabs */
  spans: SpanEntry[];
  /** index into spans, or null when the whole-mail tabs are active */
  activeSpan: number | null;
  selected: Selection | null;
  /** editable body; the quoted original is appended on top of this */
  draftBody: string;
  /** true when the service reported no usable model */
  degraded: boolean;
}

export function quoteOriginal(text: string): string {
  return text
    .split("\n")
    .map((line) => "> " + line)
    .join("\n");
}

/** The full outgoing draft; by construction it ends with the quote. */
export function draftText(state: ComposeState): string {
  const body = state.draftBody.length > 0 ? state.draftBody + "\n\n" : "";
  return body + quoteOriginal(state.mail.text);
}

function selectionFromProposal(p: Proposal): Selection {
  return {
    categoryId: p.category_id,
    categoryName: p.name,
    template: p.answer_template,
    source: "proposal",
    rank: p.rank,
  };
}

/** Fresh state from the whole-mail classification; rank 1 is preselected. */
export function initCompose(mail: Mail, proposals: Proposal[]): ComposeState {
  const first = proposals[0] ?? null;
  return {
    mail,
    proposals,
    spans: [],
    activeSpan: null,
    selected: first ? selectionFromProposal(first) : null,
    draftBody: first ? first.answer_template : "",
    degraded: false,
  };
}

/** Degraded mode: no model. Manual category selection stays available. */
export function initDegraded(mail: Mail): ComposeState {
  return {
    mail,
    proposals: null,
    spans: [],
    activeSpan: null,
    selected: null,
    draftBody: "",
    degraded: true,
  };
}

/** The proposals behind the currently visible tab set. */
export function activeProposals(state: ComposeState): Proposal[] {
  if (state.activeSpan !== null) {
    const span = state.spans[state.activeSpan];
    if (span) return span.proposals;
  }
  return state.proposals ?? [];
}

/** Record a marked span's classification: its tabs replace the active set. */
export function markSpan(
  state: ComposeState,
  start: number,
  end: number,
  proposals: Proposal[],
): ComposeState {
  const spans = [...state.spans, { start, end, proposals }];
  const first = proposals[0] ?? null;
  return {
    ...state,
    spans,
    activeSpan: spans.length - 1,
    selected: first ? selectionFromProposal(first) : state.selected,
    draftBody: first ? first.answer_template : state.draftBody,
  };
}

/** Switch tab sets: a marked span's index, or null for the whole mail. */
export function activateSpan(state: ComposeState, index: number | null): ComposeState {
  if (index !== null && (index < 0 || index >= state.spans.length)) {
    throw new RangeError(`no marked span ${index}`);
  }
  return { ...state, activeSpan: index };
}

/** Select one of the visible tabs by rank (1-based). */
export function selectProposal(state: ComposeState, rank: number): ComposeState {
  const proposal = activeProposals(state).find((p) => p.rank === rank);
  if (!proposal) {
    throw new RangeError(`no proposal with rank ${rank}`);
  }
  return {
    ...state,
    selected: selectionFromProposal(proposal),
    draftBody: proposal.answer_template,
  };
}

/** Manual fallback: pick any category from the registry browser. */
export function selectManual(
  state: ComposeState,
  categoryId: string,
  categoryName: string,
  template: string,
): ComposeState {
  return {
    ...state,
    selected: {
      categoryId,
      categoryName,
      template,
      source: "manual",
      rank: null,
    },
    draftBody: template,
  };
}

/** Agent edits to the draft body (the quote is not part of the body). */
export function editDraftBody(state: ComposeState, body: string): ComposeState {
  return { ...state, draftBody: body };
}

export function canSubmit(state: ComposeState): boolean {
  return state.selected !== null;
}

/** Build the submission; the stored text is the original mail, untouched. */
export function submitPayload(state: ComposeState): SubmitAnswerRequest {
  if (!state.selected) {
    throw new Error("nothing selected: pick a proposal or a manual category");
  }
  return {
    doc: {
      id: state.mail.id ?? null,
      sender: state.mail.sender,
      received_at: state.mail.received_at,
      text: state.mail.text,
    },
    category: state.selected.categoryId,
    edited_text: draftText(state),
  };
}

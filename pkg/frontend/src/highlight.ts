// Evidence quotes must appear verbatim inside their cited segment. The
// comparison uses the same NFC-substring semantics as the service; when a
// quote does not match we render the untouched segment plus a warning —
// never a silently truncated or fuzzy highlight.

export interface HighlightResult {
  nodes: Node[];
  matched: boolean;
}

export function highlightQuote(segmentText: string, quote: string): HighlightResult {
  const text = segmentText.normalize("NFC");
  const needle = quote.normalize("NFC");
  const index = needle ? text.indexOf(needle) : -1;
  if (index < 0) {
    return { nodes: [document.createTextNode(text)], matched: false };
  }
  const mark = document.createElement("mark");
  mark.textContent = text.slice(index, index + needle.length);
  const nodes: Node[] = [];
  if (index > 0) {
    nodes.push(document.createTextNode(text.slice(0, index)));
  }
  nodes.push(mark);
  if (index + needle.length < text.length) {
    nodes.push(document.createTextNode(text.slice(index + needle.length)));
  }
  return { nodes, matched: true };
}

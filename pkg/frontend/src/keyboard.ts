/** Keyboard bindings for the reviewer flow: 1-5 score, o overlay, arrows move. */

export type Action =
  | { kind: "score"; value: number }
  | { kind: "toggle-overlay" }
  | { kind: "next" }
  | { kind: "prev" };

/** Map a key press to an action; null for keys the app ignores. */
export function actionForKey(key: string): Action | null {
  if (key >= "1" && key <= "5") {
    return { kind: "score", value: Number(key) };
  }
  switch (key) {
    case "o":
    case "O":
      return { kind: "toggle-overlay" };
    case "ArrowRight":
      return { kind: "next" };
    case "ArrowLeft":
      return { kind: "prev" };
    default:
      return null;
  }
}

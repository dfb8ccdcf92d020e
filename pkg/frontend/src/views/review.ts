/** Theme review console: current themes, criterion feedback cards, the
 * action diff against the previous version, and the decision buttons.
 * Decision buttons are enabled only in awaiting_expert; if another client
 * advanced the session, the stale-phase banner asks for a refresh instead
 * of silently overwriting.
 */

import { ApiClient, pollUntilIdle } from '../api';
import { computeDiff } from '../diff';
import type {
  SessionSummary,
  ThemeDiffRow,
  ThemeSetPayload,
} from '../types';

const DECISIONS: { kind: string; label: string }[] = [
  { kind: 'approve', label: 'Approve (finalize)' },
  { kind: 'continue_refinement', label: 'Continue refinement' },
];

export class ReviewView {
  constructor(
    private client: ApiClient,
    private sid: string,
  ) {}

  async render(container: HTMLElement): Promise<void> {
    const summary = await this.client.getSession(this.sid);
    container.innerHTML = '';

    const banner = document.createElement('p');
    banner.className = 'phase-banner';
    banner.textContent = `Session ${summary.session_id} — phase ${summary.phase}` +
      (summary.last_advisory ? ` — advisory: ${summary.last_advisory}` : '');
    container.appendChild(banner);

    if (summary.current_theme_version === null) {
      container.appendChild(this.advanceButton(container, summary));
      return;
    }

    const current = await this.client.themes(
      this.sid,
      summary.current_theme_version,
    );
    container.appendChild(themesPanel(current));
    container.appendChild(await this.feedbackPanel());
    if (current.parent_version !== null && current.parent_version !== undefined) {
      const parent = await this.client.themes(this.sid, current.parent_version);
      const actionLists = await this.client.actions(this.sid);
      const latest = actionLists[actionLists.length - 1]?.actions ?? [];
      container.appendChild(
        diffPanel(computeDiff(parent.themes, current.themes, latest)),
      );
    }
    container.appendChild(this.decisionBar(container, summary));
  }

  private advanceButton(
    container: HTMLElement,
    summary: SessionSummary,
  ): HTMLElement {
    const button = document.createElement('button');
    button.textContent = summary.running ? 'Stage running…' : 'Run next stage';
    button.disabled = summary.running || summary.phase === 'finalized';
    button.addEventListener('click', async () => {
      await this.client.advance(this.sid);
      await pollUntilIdle(this.client, this.sid);
      await this.render(container.parentElement ?? container);
    });
    return button;
  }

  private decisionBar(
    container: HTMLElement,
    summary: SessionSummary,
  ): HTMLElement {
    const bar = document.createElement('div');
    bar.className = 'decision-bar';
    const awaiting = summary.phase === 'awaiting_expert';
    for (const { kind, label } of DECISIONS) {
      const button = document.createElement('button');
      button.textContent = label;
      button.disabled = !awaiting;
      button.addEventListener('click', async () => {
        const fresh = await this.client.getSession(this.sid);
        if (fresh.phase !== summary.phase) {
          const note = document.createElement('p');
          note.className = 'stale-banner';
          note.textContent =
            'The session advanced in another window; refresh to continue.';
          bar.appendChild(note);
          return;
        }
        await this.client.decision(this.sid, kind);
        await this.render(container.parentElement ?? container);
      });
      bar.appendChild(button);
    }
    if (!awaiting && summary.phase !== 'finalized') {
      bar.appendChild(this.advanceButton(container, summary));
    }
    return bar;
  }

  private async feedbackPanel(): Promise<HTMLElement> {
    const panel = document.createElement('section');
    panel.className = 'feedback-panel';
    const iterations = await this.client.feedback(this.sid);
    const latest = iterations[iterations.length - 1];
    if (!latest) return panel;
    for (const entry of latest.feedback as {
      criterion: string;
      issues: { text: string }[];
    }[]) {
      const card = document.createElement('article');
      const title = document.createElement('h3');
      title.textContent = entry.criterion;
      card.appendChild(title);
      if (entry.issues.length === 0) {
        const none = document.createElement('p');
        none.textContent = 'no issues';
        card.appendChild(none);
      } else {
        for (const issue of entry.issues) {
          const p = document.createElement('p');
          p.textContent = issue.text;
          card.appendChild(p);
        }
      }
      panel.appendChild(card);
    }
    return panel;
  }
}

function themesPanel(themeSet: ThemeSetPayload): HTMLElement {
  const panel = document.createElement('section');
  panel.className = 'themes-panel';
  const title = document.createElement('h2');
  title.textContent =
    `Themes v${themeSet.version} (${themeSet.produced_by})`;
  panel.appendChild(title);
  for (const theme of themeSet.themes) {
    const details = document.createElement('details');
    const name = document.createElement('summary');
    name.textContent = theme.name;
    const description = document.createElement('p');
    description.textContent = theme.description;
    details.append(name, description);
    panel.appendChild(details);
  }
  return panel;
}

function diffPanel(rows: ThemeDiffRow[]): HTMLElement {
  const panel = document.createElement('section');
  panel.className = 'diff-panel';
  const list = document.createElement('ul');
  for (const row of rows) {
    const li = document.createElement('li');
    li.className = `diff-${row.status}`;
    li.textContent = `${row.name} [${row.status}]`;
    list.appendChild(li);
  }
  panel.appendChild(list);
  return panel;
}

/** Session setup form: background, goals, the four criteria (pre-filled
 * with the bundled defaults), and transcript upload as JSON files.
 * Client-side validation mirrors the server invariants so a three-criteria
 * submission never reaches the network.
 */

import { ApiClient, ApiError } from '../api';
import { DEFAULT_CRITERIA, validateConfig } from '../criteria';
import type { Criterion, SessionSummary } from '../types';

interface TranscriptFile {
  id: string;
  title: string;
  turns: { speaker: string; text: string }[];
}

export class SetupView {
  private transcripts: TranscriptFile[] = [];
  private criteria: Criterion[] = DEFAULT_CRITERIA.map((c) => ({
    ...c,
    expert_examples: [...c.expert_examples],
  }));

  constructor(
    private client: ApiClient,
    private onCreated: (summary: SessionSummary) => void,
  ) {}

  render(container: HTMLElement): void {
    container.innerHTML = '';
    const form = document.createElement('form');
    form.className = 'setup-form';

    const background = textArea('Study background', 'background');
    const goals = textArea('Analysis goals', 'goals');
    form.append(background.wrapper, goals.wrapper);

    const criteriaBoxes = this.criteria.map((criterion) => {
      const box = textArea(`Criterion: ${criterion.kind}`, criterion.kind);
      box.input.value = criterion.description;
      const examples = textArea(
        `Expert examples for ${criterion.kind} (one per line)`,
        `${criterion.kind}-examples`,
      );
      examples.input.value = criterion.expert_examples.join('\n');
      form.append(box.wrapper, examples.wrapper);
      return { criterion, box, examples };
    });

    const upload = document.createElement('input');
    upload.type = 'file';
    upload.accept = '.json';
    upload.multiple = true;
    upload.addEventListener('change', async () => {
      this.transcripts = [];
      for (const file of Array.from(upload.files ?? [])) {
        this.transcripts.push(JSON.parse(await file.text()));
      }
    });
    form.appendChild(upload);

    const errorBox = document.createElement('ul');
    errorBox.className = 'errors';
    const submit = document.createElement('button');
    submit.type = 'submit';
    submit.textContent = 'Create session';
    form.append(errorBox, submit);

    form.addEventListener('submit', async (event) => {
      event.preventDefault();
      errorBox.innerHTML = '';
      const config = {
        background: background.input.value,
        goals: goals.input.value,
        criteria: criteriaBoxes.map(({ criterion, box, examples }) => ({
          kind: criterion.kind,
          description: box.input.value,
          expert_examples: examples.input.value
            .split('\n')
            .map((line) => line.trim())
            .filter(Boolean),
        })),
      };
      const errors = validateConfig(config);
      if (this.transcripts.length === 0) {
        errors.transcripts = 'upload at least one transcript file';
      }
      if (Object.keys(errors).length > 0) {
        showErrors(errorBox, errors);
        return;
      }
      try {
        this.onCreated(
          await this.client.createSession(config, this.transcripts),
        );
      } catch (err) {
        if (err instanceof ApiError) {
          showErrors(errorBox, { [err.code]: err.message });
        } else {
          throw err;
        }
      }
    });
    container.appendChild(form);
  }
}

function textArea(label: string, name: string) {
  const wrapper = document.createElement('label');
  wrapper.textContent = label;
  const input = document.createElement('textarea');
  input.name = name;
  wrapper.appendChild(input);
  return { wrapper, input };
}

function showErrors(box: HTMLElement, errors: Record<string, string>): void {
  for (const [field, message] of Object.entries(errors)) {
    const li = document.createElement('li');
    li.textContent = `${field}: ${message}`;
    box.appendChild(li);
  }
}
